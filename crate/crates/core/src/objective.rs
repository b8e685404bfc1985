//! Label states, cost functions and prediction rules.
//!
//! A circuit's output is read out as a vector of fidelities `F[c][m]`: one per
//! class `c` and per readout slot `m`. With the basis-state strategy (and for a
//! single qubit) there is one slot holding the overlap of the full state with
//! the class label; with the measured-qubits strategy there is one slot per
//! measured qubit, holding `⟨ψ̃_c|ρ_q|ψ̃_c⟩` for that qubit's reduced state.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{forward, CircuitSpec, DataPoint, ModelParams};
use crate::error::{Error, Result};
use crate::qmath::{fidelity_mixed_unchecked, StateVector, C64};

/// Scores within this distance of the best one count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostKind {
    /// `Σ_μ (1 - F_s(x_μ))`.
    #[serde(rename = "f")]
    Fidelity,
    /// `½ Σ_μ Σ_c (α_c F_c(x_μ) - Y_c(x_μ))²`.
    #[serde(rename = "wf")]
    WeightedFidelity,
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::Fidelity => "f",
            CostKind::WeightedFidelity => "wf",
        })
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" | "fidelity" => Ok(CostKind::Fidelity),
            "wf" | "weighted" | "weighted-fidelity" => Ok(CostKind::WeightedFidelity),
            other => Err(Error::invalid(format!(
                "unknown cost kind '{other}' (expected f or wf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Labels are the first `C` computational basis states of the whole register.
    BasisState,
    /// Labels are single-qubit Bloch states compared against each measured qubit.
    MeasuredQubits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub cost_kind: CostKind,
    pub strategy: Strategy,
    /// Qubits read out under [`Strategy::MeasuredQubits`]; ignored otherwise.
    pub measured_qubits: Vec<usize>,
    /// Optional `P(0)` cut points for threshold prediction (single qubit only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
}

impl ObjectiveConfig {
    /// Defaults: one qubit reads out qubit 0 against Bloch labels; several
    /// qubits use basis states for the fidelity cost and all qubits for the
    /// weighted cost.
    pub fn new(cost_kind: CostKind, qubits: usize) -> Self {
        let (strategy, measured_qubits) = match (qubits, cost_kind) {
            (1, _) => (Strategy::MeasuredQubits, vec![0]),
            (_, CostKind::Fidelity) => (Strategy::BasisState, Vec::new()),
            (_, CostKind::WeightedFidelity) => (Strategy::MeasuredQubits, (0..qubits).collect()),
        };
        Self {
            cost_kind,
            strategy,
            measured_qubits,
            thresholds: None,
        }
    }

    pub fn with_measured_qubits(mut self, measured: Vec<usize>) -> Self {
        self.strategy = Strategy::MeasuredQubits;
        self.measured_qubits = measured;
        self
    }

    pub fn validate(&self, qubits: usize, num_classes: usize) -> Result<()> {
        if num_classes < 2 {
            return Err(Error::invalid(format!("need at least 2 classes, got {num_classes}")));
        }
        match self.strategy {
            Strategy::BasisState => {
                if num_classes > 1usize << qubits {
                    return Err(Error::invalid(format!(
                        "{num_classes} classes exceed the {} basis states of {qubits} qubits",
                        1usize << qubits
                    )));
                }
            }
            Strategy::MeasuredQubits => {
                if self.measured_qubits.is_empty() {
                    return Err(Error::invalid("measured-qubits strategy with no measured qubits"));
                }
                for (i, &q) in self.measured_qubits.iter().enumerate() {
                    if q >= qubits {
                        return Err(Error::invalid(format!(
                            "measured qubit {q} out of range for {qubits} qubits"
                        )));
                    }
                    if self.measured_qubits[..i].contains(&q) {
                        return Err(Error::invalid(format!("measured qubit {q} listed twice")));
                    }
                }
            }
        }
        if let Some(t) = &self.thresholds {
            check_thresholds(t)?;
        }
        Ok(())
    }

    /// Readout slots per class.
    pub fn readout_width(&self) -> usize {
        match self.strategy {
            Strategy::BasisState => 1,
            Strategy::MeasuredQubits => self.measured_qubits.len().max(1),
        }
    }

    pub fn alpha_len(&self, num_classes: usize) -> usize {
        match self.cost_kind {
            CostKind::Fidelity => 0,
            CostKind::WeightedFidelity => num_classes * self.readout_width(),
        }
    }
}

/// Class label states and their pairwise fidelities `overlap[s][c] = |⟨ψ̃_c|ψ̃_s⟩|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub states: Vec<StateVector>,
    pub overlap: Vec<Vec<f64>>,
}

impl LabelSet {
    pub fn from_states(states: Vec<StateVector>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::invalid("a label set needs at least two states"));
        }
        let overlap = states
            .iter()
            .enumerate()
            .map(|(s, a)| {
                states
                    .iter()
                    .enumerate()
                    .map(|(c, b)| if s == c { Ok(1.0) } else { Ok(a.inner(b)?.norm_sqr()) })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { states, overlap })
    }

    pub fn num_classes(&self) -> usize {
        self.states.len()
    }
}

fn bloch_state(polar: f64, azimuth: f64) -> StateVector {
    let (s, c) = (0.5 * polar).sin_cos();
    StateVector::from_amplitudes(vec![C64::new(c, 0.0), C64::from_polar(s, azimuth)])
        .expect("two amplitudes form a qubit")
}

/// Maximally separated label states for `num_classes` classes.
///
/// Single-qubit (Bloch) sets: 2 → `{|0⟩, |1⟩}`; 3 → three states 120° apart on
/// the x–z great circle; 4 → tetrahedron with one vertex at `|0⟩`; 6 →
/// octahedron ordered `+Z, -Z, +X, -X, +Y, -Y`. The basis-state strategy uses
/// `|0…0⟩, |0…01⟩, …` on `qubits` qubits.
pub fn label_states(num_classes: usize, qubits: usize, strategy: Strategy) -> Result<LabelSet> {
    if num_classes < 2 {
        return Err(Error::invalid(format!("need at least 2 classes, got {num_classes}")));
    }
    let states = match strategy {
        Strategy::BasisState => {
            if num_classes > 1usize << qubits {
                return Err(Error::invalid(format!(
                    "{num_classes} classes exceed the basis of {qubits} qubits"
                )));
            }
            (0..num_classes)
                .map(|c| StateVector::basis(qubits, c))
                .collect::<Result<Vec<_>>>()?
        }
        Strategy::MeasuredQubits => match num_classes {
            2 => vec![bloch_state(0.0, 0.0), bloch_state(PI, 0.0)],
            3 => (0..3).map(|m| bloch_state(TAU * m as f64 / 3.0, 0.0)).collect(),
            4 => {
                let beta = (-1.0f64 / 3.0).acos();
                let mut v = vec![bloch_state(0.0, 0.0)];
                v.extend((0..3).map(|m| bloch_state(beta, TAU * m as f64 / 3.0)));
                v
            }
            6 => {
                let r = FRAC_1_SQRT_2;
                let amps = [
                    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                    [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
                    [C64::new(r, 0.0), C64::new(r, 0.0)],
                    [C64::new(r, 0.0), C64::new(-r, 0.0)],
                    [C64::new(r, 0.0), C64::new(0.0, r)],
                    [C64::new(r, 0.0), C64::new(0.0, -r)],
                ];
                amps.iter()
                    .map(|a| StateVector::from_amplitudes(a.to_vec()))
                    .collect::<Result<Vec<_>>>()?
            }
            other => {
                return Err(Error::invalid(format!(
                    "no single-qubit label geometry for {other} classes (supported: 2, 3, 4, 6)"
                )))
            }
        },
    };
    LabelSet::from_states(states)
}

/// Fidelities `F[c * width + m]` of `state` against every label and readout slot.
pub fn readout_fidelities(state: &StateVector, labels: &LabelSet, cfg: &ObjectiveConfig) -> Vec<f64> {
    match cfg.strategy {
        Strategy::BasisState => labels
            .states
            .iter()
            .map(|l| l.inner_unchecked(state).norm_sqr())
            .collect(),
        Strategy::MeasuredQubits if state.qubits() == 1 => labels
            .states
            .iter()
            .map(|l| l.inner_unchecked(state).norm_sqr())
            .collect(),
        Strategy::MeasuredQubits => {
            let rhos: Vec<_> = cfg
                .measured_qubits
                .iter()
                .map(|&q| state.reduced_density_unchecked(q))
                .collect();
            labels
                .states
                .iter()
                .flat_map(|l| {
                    rhos.iter()
                        .map(move |rho| fidelity_mixed_unchecked(l.amplitudes(), rho))
                })
                .collect()
        }
    }
}

/// Cost contribution of one point given its readout, and the partial
/// derivatives with respect to each readout entry and each α.
pub(crate) fn point_cost(
    fid: &[f64],
    class: usize,
    labels: &LabelSet,
    cfg: &ObjectiveConfig,
    alpha: &[f64],
) -> (f64, Vec<f64>, Vec<f64>) {
    let width = fid.len() / labels.num_classes();
    match cfg.cost_kind {
        CostKind::Fidelity => {
            let scale = 1.0 / width as f64;
            let mut d_fid = vec![0.0; fid.len()];
            let mut cost = 0.0;
            for m in 0..width {
                cost += scale * (1.0 - fid[class * width + m]);
                d_fid[class * width + m] = -scale;
            }
            (cost, d_fid, Vec::new())
        }
        CostKind::WeightedFidelity => {
            let y = &labels.overlap[class];
            let mut d_fid = vec![0.0; fid.len()];
            let mut d_alpha = vec![0.0; fid.len()];
            let mut cost = 0.0;
            for (i, (&f, &a)) in fid.iter().zip(alpha).enumerate() {
                let r = a * f - y[i / width];
                cost += 0.5 * r * r;
                d_fid[i] = r * a;
                d_alpha[i] = r * f;
            }
            (cost, d_fid, d_alpha)
        }
    }
}

fn check_setup(spec: &CircuitSpec, params: &ModelParams, labels: &LabelSet, cfg: &ObjectiveConfig) -> Result<()> {
    let classes = labels.num_classes();
    cfg.validate(spec.qubits, classes)?;
    let expected_qubits = match cfg.strategy {
        Strategy::BasisState => spec.qubits,
        Strategy::MeasuredQubits => 1,
    };
    if labels.states.iter().any(|s| s.qubits() != expected_qubits) {
        return Err(Error::invalid("label states do not match the readout strategy"));
    }
    params.check_shape(spec, cfg.alpha_len(classes))
}

fn check_class(p: &DataPoint, classes: usize) -> Result<()> {
    if p.class_index < classes {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "class index {} out of range for {classes} labels",
            p.class_index
        )))
    }
}

/// Total cost of `data` under `cfg.cost_kind`. Per-point terms are evaluated in
/// parallel and summed in dataset order.
pub fn cost(
    data: &[DataPoint],
    spec: &CircuitSpec,
    params: &ModelParams,
    labels: &LabelSet,
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    check_setup(spec, params, labels, cfg)?;
    let terms = data
        .par_iter()
        .map(|p| {
            check_class(p, labels.num_classes())?;
            let state = forward(spec, params, &p.x)?;
            let fid = readout_fidelities(&state, labels, cfg);
            Ok(point_cost(&fid, p.class_index, labels, cfg, &params.alpha).0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// `Σ_μ (1 - F)` against each point's own label.
pub fn cost_fidelity(
    data: &[DataPoint],
    spec: &CircuitSpec,
    params: &ModelParams,
    labels: &LabelSet,
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    let cfg = ObjectiveConfig {
        cost_kind: CostKind::Fidelity,
        ..cfg.clone()
    };
    cost(data, spec, params, labels, &cfg)
}

/// `½ Σ_μ Σ_c Σ_m (α_{c,m} F_{c,m} - Y_c)²`, with `α` taken from `params.alpha`.
pub fn cost_weighted(
    data: &[DataPoint],
    spec: &CircuitSpec,
    params: &ModelParams,
    labels: &LabelSet,
    cfg: &ObjectiveConfig,
) -> Result<f64> {
    let cfg = ObjectiveConfig {
        cost_kind: CostKind::WeightedFidelity,
        ..cfg.clone()
    };
    cost(data, spec, params, labels, &cfg)
}

/// Per-class score: `Σ_m F_{c,m}` for the fidelity cost, `Σ_m α_{c,m} F_{c,m}`
/// for the weighted one.
pub fn class_scores(fid: &[f64], num_classes: usize, cfg: &ObjectiveConfig, alpha: &[f64]) -> Vec<f64> {
    let width = fid.len() / num_classes;
    (0..num_classes)
        .map(|c| {
            let range = c * width..(c + 1) * width;
            match cfg.cost_kind {
                CostKind::Fidelity => fid[range].iter().sum(),
                CostKind::WeightedFidelity => fid[range.clone()].iter().zip(&alpha[range]).map(|(f, a)| a * f).sum(),
            }
        })
        .collect()
}

/// Index of the largest score; near-ties go to the lowest index.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .position(|&s| s >= best - TIE_TOLERANCE * best.abs().max(1.0))
        .unwrap_or(0)
}

/// Predicted class and the winning score.
pub fn predict_with_score(
    spec: &CircuitSpec,
    params: &ModelParams,
    x: &[f64],
    labels: &LabelSet,
    cfg: &ObjectiveConfig,
) -> Result<(usize, f64)> {
    let state = forward(spec, params, x)?;
    let fid = readout_fidelities(&state, labels, cfg);
    let scores = class_scores(&fid, labels.num_classes(), cfg, &params.alpha);
    let c = argmax_lowest(&scores);
    Ok((c, scores[c]))
}

pub fn predict(
    spec: &CircuitSpec,
    params: &ModelParams,
    x: &[f64],
    labels: &LabelSet,
    cfg: &ObjectiveConfig,
) -> Result<usize> {
    Ok(predict_with_score(spec, params, x, labels, cfg)?.0)
}

fn check_thresholds(t: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(Error::invalid("threshold list is empty"));
    }
    if t.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid(format!("thresholds must lie in [0, 1], got {t:?}")));
    }
    if t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "thresholds must be strictly ascending, got {t:?}"
        )));
    }
    Ok(())
}

/// Sector of `p0` among ascending cut points: class 0 above the top cut,
/// class `len` at or below the lowest.
pub fn threshold_sector(p0: f64, thresholds: &[f64]) -> Result<usize> {
    check_thresholds(thresholds)?;
    Ok(thresholds.iter().filter(|&&t| p0 <= t).count())
}

/// Classifies a single-qubit model by `P(0) = |⟨0|ψ⟩|²` against `thresholds`.
pub fn predict_threshold(spec: &CircuitSpec, params: &ModelParams, x: &[f64], thresholds: &[f64]) -> Result<usize> {
    if spec.qubits != 1 {
        return Err(Error::Unsupported(
            "threshold prediction needs a single-qubit model".into(),
        ));
    }
    check_thresholds(thresholds)?;
    let state = forward(spec, params, x)?;
    threshold_sector(state.prob_zero(), thresholds)
}
