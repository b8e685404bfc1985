//! Experiment configuration and flag overrides.

use std::fs;
use std::path::{Path, PathBuf};

use reupload_core::optimize::{LbfgsConfig, SgdConfig};
use reupload_core::{CostKind, Error, GradMethod, Minimizer, ProblemId, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_LAYERS: [usize; 8] = [1, 2, 3, 4, 5, 6, 8, 10];
pub const DEFAULT_RESTARTS: usize = 5;

/// One experiment, possibly spanning several layer counts.
///
/// Read from a JSON document; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub qubits: usize,
    pub layers: Vec<usize>,
    pub entangled: bool,
    pub cost: CostKind,
    pub minimizer: Minimizer,
    pub grad_method: GradMethod,
    /// Restrict the weighted-cost readout to these qubits (default: all).
    pub measured_qubits: Option<Vec<usize>>,
    pub restarts: usize,
    /// Master seed; dataset and restart seeds are derived from it.
    pub seed: u64,
    /// Override the problem's default training set size.
    pub train_size: Option<usize>,
    pub test_size: Option<usize>,
    /// Seed of the held-out set, when it should not be derived from `seed`.
    pub test_seed: Option<u64>,
    /// Evaluate on this dataset file instead of a generated test set.
    pub test_data: Option<PathBuf>,
    /// Directory receiving model and report files.
    pub out: Option<PathBuf>,
    /// Concurrent sweep cells (0 = rayon default).
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemId::Circle,
            qubits: 1,
            layers: DEFAULT_LAYERS.to_vec(),
            entangled: false,
            cost: CostKind::WeightedFidelity,
            minimizer: Minimizer::default(),
            grad_method: GradMethod::Auto,
            measured_qubits: None,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            train_size: None,
            test_size: None,
            test_seed: None,
            test_data: None,
            out: None,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.layers.contains(&0) {
            return Err(Error::invalid(format!("layers must be ≥ 1, got {:?}", self.layers)));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be ≥ 1"));
        }
        if self.train_size == Some(0) || self.test_size == Some(0) {
            return Err(Error::invalid("dataset sizes must be ≥ 1"));
        }
        match &self.minimizer {
            Minimizer::Lbfgs(c) => c.validate(),
            Minimizer::Sgd(c) => c.validate(),
        }
    }

    /// One single-layer-count config per entry of `layers`.
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        self.layers
            .iter()
            .map(|&l| ExperimentConfig {
                layers: vec![l],
                ..self.clone()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimizerKind {
    Lbfgs,
    Sgd,
}

impl std::str::FromStr for MinimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbfgs" => Ok(MinimizerKind::Lbfgs),
            "sgd" => Ok(MinimizerKind::Sgd),
            other => Err(Error::invalid(format!(
                "unknown minimizer {other:?} (expected lbfgs or sgd)"
            ))),
        }
    }
}

/// Values given on the command line; each one, when present, replaces the
/// corresponding key of the file (or default) config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub problem: Option<ProblemId>,
    pub qubits: Option<usize>,
    pub layers: Option<Vec<usize>>,
    pub entangled: Option<bool>,
    pub cost: Option<CostKind>,
    pub minimizer: Option<MinimizerKind>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        if let Some(p) = self.problem {
            cfg.problem = p;
        }
        if let Some(q) = self.qubits {
            cfg.qubits = q;
        }
        if let Some(l) = &self.layers {
            cfg.layers = l.clone();
        }
        if let Some(e) = self.entangled {
            cfg.entangled = e;
        }
        if let Some(c) = self.cost {
            cfg.cost = c;
        }
        // switching kind resets the minimizer settings; keeping the kind keeps them
        match (self.minimizer, cfg.minimizer) {
            (Some(MinimizerKind::Lbfgs), Minimizer::Sgd(_)) => cfg.minimizer = Minimizer::Lbfgs(LbfgsConfig::default()),
            (Some(MinimizerKind::Sgd), Minimizer::Lbfgs(_)) => cfg.minimizer = Minimizer::Sgd(SgdConfig::default()),
            _ => {}
        }
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        cfg
    }
}

/// Flags over file over defaults.
pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let base = match file {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let cfg = overrides.apply(base);
    cfg.validate()?;
    Ok(cfg)
}
