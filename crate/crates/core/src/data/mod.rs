//! Datasets, CSV ingestion, scaling, semi-supervised masks and synthetic
//! domain-shift scenarios.

mod csv_io;
mod masks;
mod scaler;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{CraftError, Result};

pub use csv_io::{load_csv, load_csv_str, write_csv, write_csv_string};
pub use masks::{inject_marginal_bias, stratified_label_mask, BiasThreshold};
pub use scaler::{apply_scaler, fit_scaler, invert_scaler, ScalerParams};
pub use synth::{generate_synthetic, ground_truth, GeneratorSpec, SyntheticSplits};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CraftError::Shape(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(CraftError::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }
}

/// Feature matrix, labels and a per-row labeled mask.
///
/// Label slots of unlabeled rows may hold a value (a masked-out ground truth
/// that training never reads) or `NaN` when the value is unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<f64>,
    labeled: Vec<bool>,
    meta: Option<ScalerParams>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<f64>, labeled: Vec<bool>) -> Result<Self> {
        let n = features.rows();
        if n == 0 || features.cols() == 0 {
            return Err(CraftError::invalid("dataset needs N >= 1 and d >= 1"));
        }
        if labels.len() != n || labeled.len() != n {
            return Err(CraftError::Shape(format!(
                "{n} feature rows but {} labels and {} mask entries",
                labels.len(),
                labeled.len()
            )));
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(CraftError::invalid(format!(
                "non-finite feature at row {}, column {}",
                pos / features.cols(),
                pos % features.cols()
            )));
        }
        if let Some(i) = (0..n).find(|&i| labeled[i] && !labels[i].is_finite()) {
            return Err(CraftError::invalid(format!(
                "labeled row {i} has a non-finite label"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            labeled,
            meta: None,
        })
    }

    /// Fully labeled dataset.
    pub fn labeled(features: Matrix, labels: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        Self::new(features, labels, vec![true; n])
    }

    pub fn with_meta(mut self, meta: Option<ScalerParams>) -> Self {
        self.meta = meta;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn labeled_mask(&self) -> &[bool] {
        &self.labeled
    }

    pub fn meta(&self) -> Option<&ScalerParams> {
        self.meta.as_ref()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labeled.iter().all(|&l| l)
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled.iter().filter(|&&l| l).count()
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labeled[i]).collect()
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.labeled[i]).collect()
    }

    /// Label values of labeled rows, in row order.
    pub fn labeled_labels(&self) -> Vec<f64> {
        self.labeled_indices()
            .into_iter()
            .map(|i| self.labels[i])
            .collect()
    }

    /// Copy of the selected rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            labeled: indices.iter().map(|&i| self.labeled[i]).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Same rows with a replacement mask; labels are untouched.
    pub fn with_mask(&self, labeled: Vec<bool>) -> Result<Dataset> {
        let ds = Dataset::new(self.features.clone(), self.labels.clone(), labeled)?;
        Ok(ds.with_meta(self.meta.clone()))
    }

    pub(crate) fn require_fully_labeled(&self, op: &str) -> Result<()> {
        if !self.is_fully_labeled() {
            return Err(CraftError::invalid(format!(
                "{op} requires a fully labeled dataset"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_features_and_missing_labels() {
        let m = Matrix::new(2, 1, vec![0.0, f64::NAN]).unwrap();
        assert!(Dataset::labeled(m, vec![1.0, 2.0]).is_err());
        let m = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(Dataset::new(m.clone(), vec![1.0, f64::NAN], vec![true, true]).is_err());
        assert!(Dataset::new(m, vec![1.0, f64::NAN], vec![true, false]).is_ok());
    }

    #[test]
    fn rejects_empty() {
        let m = Matrix::new(0, 1, vec![]).unwrap();
        assert!(Dataset::labeled(m, vec![]).is_err());
    }

    #[test]
    fn subset_keeps_order() {
        let m = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let ds = Dataset::labeled(m, vec![10.0, 11.0, 12.0]).unwrap();
        let s = ds.subset(&[2, 0]);
        assert_eq!(s.labels(), &[12.0, 10.0]);
        assert_eq!(s.features().row(0), &[2.0]);
    }
}
