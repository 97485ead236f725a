use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Method;
use super::pipeline::{adapt, RunSettings, TargetSplits};
use crate::engine::RunReport;
use crate::error::{CraftError, Result};
use crate::numeric::median;
use crate::prior::LabelPrior;
use crate::regressor::Checkpoint;

/// One sweep cell: the report, or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub method: Method,
    pub label_fraction: f64,
    pub alpha: f64,
    pub bins: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<RunReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Median over seeds for one (method, fraction, alpha, bins) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    pub label_fraction: f64,
    pub alpha: f64,
    pub bins: usize,
    pub n_runs: usize,
    pub n_failed: usize,
    pub median_rmse: Option<f64>,
    pub median_pbcor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepReport {
    pub fn find(&self, method: Method, fraction: f64, alpha: f64, bins: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| {
            a.method == method && a.label_fraction == fraction && a.alpha == alpha && a.bins == bins
        })
    }
}

/// Groups rows by cell settings (seed excluded), in first-appearance order.
pub fn aggregate(rows: &[SweepRow]) -> Vec<Aggregate> {
    let mut groups: Vec<(Aggregate, Vec<f64>, Vec<f64>)> = Vec::new();
    for row in rows {
        let pos = groups.iter().position(|(a, _, _)| {
            a.method == row.method
                && a.label_fraction == row.label_fraction
                && a.alpha == row.alpha
                && a.bins == row.bins
        });
        let pos = pos.unwrap_or_else(|| {
            groups.push((
                Aggregate {
                    method: row.method,
                    label_fraction: row.label_fraction,
                    alpha: row.alpha,
                    bins: row.bins,
                    n_runs: 0,
                    n_failed: 0,
                    median_rmse: None,
                    median_pbcor: None,
                },
                Vec::new(),
                Vec::new(),
            ));
            groups.len() - 1
        });
        let (agg, rmses, pbcors) = &mut groups[pos];
        agg.n_runs += 1;
        match &row.report {
            Some(r) => {
                rmses.push(r.rmse);
                pbcors.extend(r.pbcor);
            }
            None => agg.n_failed += 1,
        }
    }
    groups
        .into_iter()
        .map(|(mut a, r, p)| {
            a.median_rmse = (!r.is_empty()).then(|| median(&r));
            a.median_pbcor = (!p.is_empty()).then(|| median(&p));
            a
        })
        .collect()
}

struct Ordered<F> {
    next: usize,
    pending: BTreeMap<usize, SweepRow>,
    sink: F,
    failure: Option<CraftError>,
}

/// Runs every cell, on `threads` workers (0 = all cores). Rows reach `sink` in
/// cell order as soon as every earlier cell has finished. A failing cell is
/// recorded and the sweep continues; a failing sink stops further output.
pub fn run_sweep<F>(
    checkpoint: &Checkpoint,
    target: &TargetSplits,
    cells: &[RunSettings],
    file_prior: Option<&LabelPrior>,
    threads: usize,
    sink: F,
) -> Result<SweepReport>
where
    F: FnMut(&SweepRow) -> Result<()> + Send,
{
    let state = Mutex::new(Ordered {
        next: 0,
        pending: BTreeMap::new(),
        sink,
        failure: None,
    });
    let run_cell = |(cell, s): (usize, &RunSettings)| {
        let result = adapt(checkpoint, target, s, file_prior);
        let row = SweepRow {
            cell,
            method: s.method,
            label_fraction: s.label_fraction,
            alpha: s.alpha,
            bins: s.bins,
            seed: s.seed,
            error: result.as_ref().err().map(|e| e.to_string()),
            report: result.ok(),
        };
        let mut guard = state.lock().expect("sweep state poisoned");
        let st = &mut *guard;
        st.pending.insert(cell, row.clone());
        while let Some(r) = st.pending.remove(&st.next) {
            st.next += 1;
            if st.failure.is_none() {
                if let Err(e) = (st.sink)(&r) {
                    st.failure = Some(e);
                }
            }
        }
        row
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CraftError::invalid(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| cells.par_iter().enumerate().map(run_cell).collect());
    if let Some(e) = state.into_inner().expect("sweep state poisoned").failure {
        return Err(e);
    }
    let aggregates = aggregate(&rows);
    Ok(SweepReport { rows, aggregates })
}
