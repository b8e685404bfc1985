//! Architecture sweeps producing one CSV row per cell.

use std::path::Path;

use rayon::prelude::*;
use reupload_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::experiment::run_experiment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub problem: String,
    pub qubits: usize,
    pub layers: usize,
    pub entangled: bool,
    pub cost: String,
    pub params: Option<usize>,
    pub best_cost: Option<f64>,
    pub train_success: Option<f64>,
    pub test_success: Option<f64>,
    pub converged: Option<bool>,
    /// Empty when the cell succeeded.
    pub error: String,
}

impl SweepRow {
    fn key(&self) -> (String, usize, usize, bool, String) {
        (
            self.problem.clone(),
            self.qubits,
            self.layers,
            self.entangled,
            self.cost.clone(),
        )
    }
}

fn run_cell(cell: &ExperimentConfig) -> SweepRow {
    let mut row = SweepRow {
        problem: cell.problem.to_string(),
        qubits: cell.qubits,
        layers: cell.layers[0],
        entangled: cell.entangled,
        cost: cell.cost.to_string(),
        params: None,
        best_cost: None,
        train_success: None,
        test_success: None,
        converged: None,
        error: String::new(),
    };
    match run_experiment(cell) {
        Ok((r, _)) => {
            row.params = Some(r.total_params);
            row.best_cost = Some(r.best_cost);
            row.train_success = Some(r.train_success);
            row.test_success = Some(r.test_success);
            row.converged = Some(r.converged);
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Runs every (config, layer count) cell; a failing cell is recorded in its
/// row and the others continue. Rows come back sorted by
/// (problem, qubits, layers, entangled, cost) whatever the completion order.
pub fn sweep(configs: &[ExperimentConfig], workers: usize) -> Result<Vec<SweepRow>> {
    if configs.is_empty() {
        return Err(Error::invalid("sweep needs at least one config"));
    }
    let mut cells = Vec::new();
    for cfg in configs {
        if cfg.layers.is_empty() {
            return Err(Error::invalid("config without layer counts"));
        }
        cells.extend(cfg.cells());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| cells.par_iter().map(run_cell).collect());
    rows.sort_by_key(SweepRow::key);
    Ok(rows)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::parse(path.display().to_string(), e);
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
