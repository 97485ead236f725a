use std::path::{Path, PathBuf};

use super::{Dataset, Matrix};
use crate::error::{CraftError, Result};

/// Reads `f0,...,f{d-1},y[,labeled]`. An absent `labeled` column means every
/// row is labeled; the only encoding of a missing label is an empty `y` cell.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CraftError::io(path, e))?;
    parse(&text, path.to_path_buf())
}

pub fn load_csv_str(text: &str) -> Result<Dataset> {
    parse(text, PathBuf::from("<memory>"))
}

fn parse(text: &str, path: PathBuf) -> Result<Dataset> {
    let err = |line: usize, msg: String| CraftError::Csv {
        path: path.clone(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| err(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    let has_mask = names.last() == Some(&"labeled");
    let y_col = if has_mask {
        names.len().checked_sub(2)
    } else {
        names.len().checked_sub(1)
    };
    let d = match y_col {
        Some(d) if d >= 1 && names[d] == "y" => d,
        _ => {
            return Err(err(
                1,
                format!("malformed header {names:?}, expected f0,...,f{{d-1}},y[,labeled]"),
            ))
        }
    };
    for (j, name) in names[..d].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(err(1, format!("malformed header: column {j} is {name:?}, expected f{j}")));
        }
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut labeled = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| err(line, e.to_string()))?;
        if record.len() != names.len() {
            return Err(err(
                line,
                format!("expected {} cells, found {}", names.len(), record.len()),
            ));
        }
        for j in 0..d {
            let cell = &record[j];
            let v: f64 = cell
                .parse()
                .map_err(|_| err(line, format!("non-numeric cell {cell:?} in column f{j}")))?;
            features.push(v);
        }
        let is_labeled = if has_mask {
            match &record[d + 1] {
                "1" => true,
                "0" => false,
                other => return Err(err(line, format!("labeled must be 0 or 1, found {other:?}"))),
            }
        } else {
            true
        };
        let y_cell = &record[d];
        let y = if y_cell.is_empty() {
            if is_labeled {
                return Err(err(line, "labeled sample missing label".to_string()));
            }
            f64::NAN
        } else {
            y_cell
                .parse()
                .map_err(|_| err(line, format!("non-numeric label {y_cell:?}")))?
        };
        labels.push(y);
        labeled.push(is_labeled);
    }
    let rows = labels.len();
    let matrix = Matrix::new(rows, d, features)?;
    Dataset::new(matrix, labels, labeled)
}

/// Serializes with the `labeled` column always present. Unknown labels are
/// written as empty cells.
pub fn write_csv_string(ds: &Dataset) -> String {
    let d = ds.dim();
    let mut out = String::new();
    for j in 0..d {
        out.push_str(&format!("f{j},"));
    }
    out.push_str("y,labeled\n");
    for i in 0..ds.len() {
        for v in ds.features().row(i) {
            out.push_str(&format!("{v},"));
        }
        let y = ds.labels()[i];
        if y.is_finite() {
            out.push_str(&format!("{y}"));
        }
        out.push_str(if ds.labeled_mask()[i] { ",1\n" } else { ",0\n" });
    }
    out
}

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_csv_string(ds)).map_err(|e| CraftError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_mask_column_means_all_labeled() {
        let ds = load_csv_str("f0,f1,y\n1,2,3\n4,5,6\n7,8,9\n").unwrap();
        assert_eq!(ds.labeled_mask(), &[true, true, true]);
        assert_eq!(ds.labels(), &[3.0, 6.0, 9.0]);
        assert_eq!(ds.dim(), 2);
    }

    #[test]
    fn empty_label_on_unlabeled_row() {
        let ds = load_csv_str("f0,f1,y,labeled\n0.1,0.2,,0\n0.3,0.4,1.5,1\n").unwrap();
        assert_eq!(ds.labeled_mask(), &[false, true]);
        assert!(ds.labels()[0].is_nan());
        assert_eq!(ds.labels()[1], 1.5);
    }

    #[test]
    fn labeled_row_without_label_is_rejected() {
        let e = load_csv_str("f0,f1,y,labeled\n0.1,0.2,,1\n").unwrap_err();
        assert!(e.to_string().contains("labeled sample missing label"), "{e}");
    }

    #[test]
    fn malformed_header_and_cells() {
        assert!(load_csv_str("a,b,y\n1,2,3\n").is_err());
        assert!(load_csv_str("f0,f1\n1,2\n").is_err());
        assert!(load_csv_str("y\n1\n").is_err());
        assert!(load_csv_str("f0,y\nabc,1\n").is_err());
        assert!(load_csv_str("f0,y\n1,abc\n").is_err());
        assert!(load_csv_str("f0,y,labeled\n1,2,yes\n").is_err());
    }

    #[test]
    fn write_then_read_preserves_bits() {
        let text = "f0,y,labeled\n0.1,0.30000000000000004,1\n-2e-300,,0\n";
        let ds = load_csv_str(text).unwrap();
        let again = load_csv_str(&write_csv_string(&ds)).unwrap();
        assert_eq!(again.features(), ds.features());
        assert_eq!(again.labels()[0].to_bits(), ds.labels()[0].to_bits());
        assert!(again.labels()[1].is_nan());
        assert_eq!(again.labeled_mask(), ds.labeled_mask());
    }
}
