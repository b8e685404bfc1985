//! Training a classifier on a dataset.

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitSpec, DataPoint, ModelParams};
use crate::error::{Error, Result};
use crate::grad::{cost_and_grad_backprop, cost_and_grad_parameter_shift, Gradient};
use crate::model::Model;
use crate::objective::{self, label_states, CostKind, LabelSet, ObjectiveConfig};
use crate::optimize::{lbfgs_minimize, sgd_minimize, BatchObjective, LbfgsConfig, SgdConfig, TrainResult};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Minimizer {
    Lbfgs(LbfgsConfig),
    Sgd(SgdConfig),
}

impl Default for Minimizer {
    fn default() -> Self {
        Minimizer::Lbfgs(LbfgsConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradMethod {
    /// Backpropagation for the single-qubit fidelity cost, parameter shifts otherwise.
    #[default]
    Auto,
    Backprop,
    ParameterShift,
}

/// A cost over a fixed training set, exposed on the packed free-parameter vector.
pub struct TrainingProblem<'a> {
    spec: CircuitSpec,
    cfg: ObjectiveConfig,
    labels: LabelSet,
    data: &'a [DataPoint],
    alpha_len: usize,
    method: GradMethod,
}

impl<'a> TrainingProblem<'a> {
    pub fn new(
        spec: CircuitSpec,
        cfg: ObjectiveConfig,
        num_classes: usize,
        data: &'a [DataPoint],
        method: GradMethod,
    ) -> Result<Self> {
        spec.validate()?;
        cfg.validate(spec.qubits, num_classes)?;
        if data.is_empty() {
            return Err(Error::invalid("empty training set"));
        }
        if let Some(p) = data
            .iter()
            .find(|p| p.x.len() != spec.data_dim || p.class_index >= num_classes)
        {
            return Err(Error::invalid(format!(
                "training point {:?} (class {}) does not fit a {}-dimensional, {num_classes}-class problem",
                p.x, p.class_index, spec.data_dim
            )));
        }
        let backprop_ok = spec.qubits == 1 && cfg.cost_kind == CostKind::Fidelity;
        if method == GradMethod::Backprop && !backprop_ok {
            return Err(Error::Unsupported(
                "backpropagation covers only the single-qubit fidelity cost".into(),
            ));
        }
        let labels = label_states(num_classes, spec.qubits, cfg.strategy)?;
        let method = match method {
            GradMethod::Auto if backprop_ok => GradMethod::Backprop,
            GradMethod::Auto => GradMethod::ParameterShift,
            m => m,
        };
        Ok(Self {
            alpha_len: cfg.alpha_len(num_classes),
            spec,
            cfg,
            labels,
            data,
            method,
        })
    }

    pub fn alpha_len(&self) -> usize {
        self.alpha_len
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn eval(&self, free: &[f64], data: &[DataPoint]) -> Result<(f64, Vec<f64>)> {
        let params = ModelParams::from_free_vec(&self.spec, self.alpha_len, free)?;
        let (c, g): (f64, Gradient) = match self.method {
            GradMethod::Backprop => cost_and_grad_backprop(&self.spec, &params, data, &self.labels)?,
            _ => cost_and_grad_parameter_shift(&self.spec, &params, data, &self.labels, &self.cfg)?,
        };
        Ok((c, g.to_free_vec(&self.spec)))
    }

    /// Full-dataset cost and gradient.
    pub fn cost_grad(&self, free: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.eval(free, self.data)
    }
}

impl BatchObjective for TrainingProblem<'_> {
    fn num_terms(&self) -> usize {
        self.data.len()
    }

    fn batch_cost_grad(&self, params: &[f64], batch: &[usize]) -> Result<(f64, Vec<f64>)> {
        let subset: Vec<DataPoint> = batch.iter().map(|&i| self.data[i].clone()).collect();
        self.eval(params, &subset)
    }

    fn cost(&self, free: &[f64]) -> Result<f64> {
        let params = ModelParams::from_free_vec(&self.spec, self.alpha_len, free)?;
        objective::cost(self.data, &self.spec, &params, &self.labels, &self.cfg)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub result: TrainResult,
}

/// Initializes parameters from `seed` and minimizes the configured cost over `data`.
pub fn train(
    spec: CircuitSpec,
    cfg: ObjectiveConfig,
    num_classes: usize,
    data: &[DataPoint],
    minimizer: &Minimizer,
    method: GradMethod,
    seed: u64,
) -> Result<TrainOutcome> {
    let problem = TrainingProblem::new(spec, cfg.clone(), num_classes, data, method)?;
    let init = ModelParams::random(&spec, problem.alpha_len(), seed);
    let x0 = init.to_free_vec(&spec);
    let result = match minimizer {
        Minimizer::Lbfgs(c) => lbfgs_minimize(|p| problem.cost_grad(p), &x0, c)?,
        Minimizer::Sgd(c) => {
            let c = SgdConfig {
                seed: rng::derive_seed(seed, c.seed),
                ..*c
            };
            sgd_minimize(&problem, &x0, &c)?
        }
    };
    let params = ModelParams::from_free_vec(&spec, problem.alpha_len(), &result.params)?;
    let model = Model::new(spec, params, cfg, num_classes, seed)?;
    Ok(TrainOutcome { model, result })
}
