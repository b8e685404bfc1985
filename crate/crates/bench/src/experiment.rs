//! Single experiment runs: data generation, multi-restart training, evaluation.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use reupload_core::optimize::{multi_restart, restart_seed};
use reupload_core::problems::{generate_dataset, load_dataset};
use reupload_core::rng::derive_seed;
use reupload_core::{
    success_rate, train, CircuitSpec, Dataset, Error, Model, ObjectiveConfig, ParamCount, Result, TrainOutcome,
};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;
const RESTART_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: ExperimentConfig,
    pub num_classes: usize,
    pub param_count: ParamCount,
    pub total_params: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    pub restart_seeds: Vec<u64>,
    /// Final cost of every restart, in restart order.
    pub restart_costs: Vec<f64>,
    pub best_restart: usize,
    pub best_cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub train_success: f64,
    /// Measured on the held-out set only.
    pub test_success: f64,
    pub wall_seconds: f64,
    pub model_path: Option<PathBuf>,
}

impl TrainReport {
    /// Copy with the wall-clock time zeroed, for comparisons between runs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_seconds: 0.0,
            ..self.clone()
        }
    }
}

pub fn train_seed(cfg: &ExperimentConfig) -> u64 {
    derive_seed(cfg.seed, TRAIN_STREAM)
}

pub fn test_seed(cfg: &ExperimentConfig) -> u64 {
    cfg.test_seed.unwrap_or_else(|| derive_seed(cfg.seed, TEST_STREAM))
}

pub fn training_set(cfg: &ExperimentConfig) -> Result<Dataset> {
    let n = cfg.train_size.unwrap_or(cfg.problem.def().train_size);
    generate_dataset(cfg.problem, n, train_seed(cfg))
}

pub fn test_set(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.test_data {
        Some(path) => {
            let data = load_dataset(path)?;
            if data.problem != cfg.problem {
                return Err(Error::invalid(format!(
                    "{} holds a {} dataset, expected {}",
                    path.display(),
                    data.problem,
                    cfg.problem
                )));
            }
            Ok(data)
        }
        None => {
            let n = cfg.test_size.unwrap_or(cfg.problem.def().test_size);
            generate_dataset(cfg.problem, n, test_seed(cfg))
        }
    }
}

pub fn objective_config(cfg: &ExperimentConfig) -> ObjectiveConfig {
    let base = ObjectiveConfig::new(cfg.cost, cfg.qubits);
    match &cfg.measured_qubits {
        Some(m) => base.with_measured_qubits(m.clone()),
        None => base,
    }
}

/// File name stem shared by a cell's model and report.
pub fn cell_stem(cfg: &ExperimentConfig) -> String {
    format!(
        "{}-q{}-l{}-{}-{}",
        cfg.problem,
        cfg.qubits,
        cfg.layers.first().copied().unwrap_or(0),
        if cfg.entangled { "ent" } else { "noent" },
        cfg.cost
    )
}

fn single_layer_count(cfg: &ExperimentConfig) -> Result<usize> {
    match cfg.layers.as_slice() {
        [l] => Ok(*l),
        other => Err(Error::invalid(format!(
            "a single run needs exactly one layer count, got {other:?} (use sweep for several)"
        ))),
    }
}

/// Trains the configured circuit with restarts and evaluates the best model.
///
/// The training set is generated before the test set is touched, and nothing
/// from the test set feeds back into training.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(TrainReport, Model)> {
    let start = Instant::now();
    cfg.validate()?;
    let layers = single_layer_count(cfg)?;
    let def = cfg.problem.def();
    let spec = CircuitSpec::new(cfg.qubits, layers, cfg.entangled, def.dim)?;
    let objective = objective_config(cfg);
    let train_data = training_set(cfg)?;

    let base = derive_seed(cfg.seed, RESTART_STREAM);
    let summary = multi_restart(cfg.restarts, base, |seed| {
        let out = train(
            spec,
            objective.clone(),
            def.num_classes,
            &train_data.points,
            &cfg.minimizer,
            cfg.grad_method,
            seed,
        )?;
        let cost = if out.result.cost.is_nan() {
            f64::INFINITY
        } else {
            out.result.cost
        };
        Ok((cost, out))
    })?;
    let TrainOutcome { model, result } = summary.best;

    let train_success = success_rate(&model, &train_data.points)?;
    let test_data = test_set(cfg)?;
    let test_success = success_rate(&model, &test_data.points)?;

    let param_count = model.param_count();
    let mut report = TrainReport {
        config: cfg.clone(),
        num_classes: def.num_classes,
        param_count,
        total_params: param_count.total(),
        train_seed: train_seed(cfg),
        test_seed: test_data.seed,
        restart_seeds: (0..cfg.restarts).map(|r| restart_seed(base, r)).collect(),
        restart_costs: summary.final_costs,
        best_restart: summary.best_index,
        best_cost: result.cost,
        iterations: result.iterations,
        evaluations: result.evaluations,
        converged: result.converged && result.cost.is_finite(),
        train_success,
        test_success,
        wall_seconds: 0.0,
        model_path: None,
    };
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stem = cell_stem(cfg);
        let model_path = dir.join(format!("{stem}.model.json"));
        model.save(&model_path)?;
        report.model_path = Some(model_path);
        report.wall_seconds = start.elapsed().as_secs_f64();
        write_json(&dir.join(format!("{stem}.report.json")), &report)?;
    } else {
        report.wall_seconds = start.elapsed().as_secs_f64();
    }
    Ok((report, model))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_path: PathBuf,
    pub problem: String,
    pub points: usize,
    pub success: f64,
}

pub fn evaluate(model_path: &Path, data: &Dataset) -> Result<EvalReport> {
    let model = Model::load(model_path)?;
    Ok(EvalReport {
        model_path: model_path.to_path_buf(),
        problem: data.problem.to_string(),
        points: data.len(),
        success: success_rate(&model, &data.points)?,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path.display().to_string(), e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
