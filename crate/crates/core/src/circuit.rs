//! Data re-uploading circuits.
//!
//! A layer on one qubit is `U(θ + w∘x)`; for data of dimension `d > 3` the
//! input is split into `k = ⌈d/3⌉` chunks and the layer becomes the product of
//! one such rotation per chunk, applied in ascending chunk order. Layers are
//! stacked `N` times on each of `Q` qubits, with a fixed CZ pattern between
//! consecutive layers when entanglement is enabled.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::CostKind;
use crate::qmath::{su2_unchecked, StateVector, Unitary2, MAX_QUBITS};
use crate::rng;

/// Circuit architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub qubits: usize,
    pub layers: usize,
    pub entangled: bool,
    pub data_dim: usize,
}

impl CircuitSpec {
    pub fn new(qubits: usize, layers: usize, entangled: bool, data_dim: usize) -> Result<Self> {
        let spec = Self {
            qubits,
            layers,
            entangled,
            data_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_QUBITS).contains(&self.qubits) {
            return Err(Error::invalid(format!(
                "qubits must be in 1..={MAX_QUBITS}, got {}",
                self.qubits
            )));
        }
        if self.layers == 0 {
            return Err(Error::invalid("layers must be ≥ 1"));
        }
        if self.data_dim == 0 {
            return Err(Error::invalid("data dimension must be ≥ 1"));
        }
        if self.entangled && self.qubits < 2 {
            return Err(Error::invalid("entanglement requires at least 2 qubits"));
        }
        Ok(())
    }

    /// Number of three-component chunks per layer, `⌈d/3⌉`.
    pub fn sublayers(&self) -> usize {
        self.data_dim.div_ceil(3)
    }

    /// Length of the `theta` (and `weights`) tensor.
    pub fn angle_len(&self) -> usize {
        self.qubits * self.layers * self.sublayers() * 3
    }

    /// Flat offset of `[qubit][layer][sublayer][component]`.
    pub fn index(&self, qubit: usize, layer: usize, sublayer: usize, component: usize) -> usize {
        ((qubit * self.layers + layer) * self.sublayers() + sublayer) * 3 + component
    }

    /// Whether a weight entry multiplies a zero-padding data slot.
    pub fn is_padded(&self, sublayer: usize, component: usize) -> bool {
        sublayer * 3 + component >= self.data_dim
    }

    /// CZ pairs applied after layer `layer` (0-based). Empty after the last
    /// layer and for unentangled circuits.
    ///
    /// Two qubits always use CZ(0,1). Otherwise layers alternate between pattern
    /// A = {(0,1), (2,3), …} and pattern B = {(1,2), (3,4), …} (plus the closing
    /// pair (0, Q-1) for even Q ≥ 4), starting with A.
    pub fn entangling_pairs(&self, layer: usize) -> Vec<(usize, usize)> {
        if !self.entangled || layer + 1 >= self.layers {
            return Vec::new();
        }
        let q = self.qubits;
        if q == 2 {
            return vec![(0, 1)];
        }
        let start = layer % 2;
        let mut pairs: Vec<_> = (start..q - 1).step_by(2).map(|a| (a, a + 1)).collect();
        if start == 1 && q.is_multiple_of(2) {
            pairs.push((0, q - 1));
        }
        pairs
    }
}

/// Trainable values. `theta` and `weights` are flat tensors in
/// `[qubit][layer][sublayer][component]` order (see [`CircuitSpec::index`]);
/// `alpha` holds class weights for the weighted-fidelity cost and is empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(spec: &CircuitSpec, alpha_len: usize) -> Self {
        Self {
            theta: vec![0.0; spec.angle_len()],
            weights: vec![0.0; spec.angle_len()],
            alpha: vec![1.0; alpha_len],
        }
    }

    /// θ uniform in `[0, 2π)`, unpadded w uniform in `[-1, 1)`, α = 1.
    pub fn random(spec: &CircuitSpec, alpha_len: usize, seed: u64) -> Self {
        let mut prng = rng::seeded(seed);
        let mut p = Self::zeros(spec, alpha_len);
        for t in p.theta.iter_mut() {
            *t = rng::uniform(&mut prng, 0.0, TAU);
        }
        for (slot, w) in p.weights.iter_mut().enumerate() {
            let within = slot % (spec.sublayers() * 3);
            if !spec.is_padded(within / 3, within % 3) {
                *w = rng::uniform(&mut prng, -1.0, 1.0);
            }
        }
        p
    }

    pub fn check_shape(&self, spec: &CircuitSpec, alpha_len: usize) -> Result<()> {
        let n = spec.angle_len();
        if self.theta.len() != n || self.weights.len() != n {
            return Err(Error::invalid(format!(
                "parameter shape mismatch: theta {} / weights {}, circuit needs {n}",
                self.theta.len(),
                self.weights.len()
            )));
        }
        if self.alpha.len() != alpha_len {
            return Err(Error::invalid(format!(
                "alpha has {} entries, expected {alpha_len}",
                self.alpha.len()
            )));
        }
        if free_weight_slots(spec).len() != n {
            let stray = (0..n).find(|&i| {
                let within = i % (spec.sublayers() * 3);
                spec.is_padded(within / 3, within % 3) && self.weights[i] != 0.0
            });
            if let Some(i) = stray {
                return Err(Error::invalid(format!("padded weight entry {i} is non-zero")));
            }
        }
        Ok(())
    }

    /// Packs the free coordinates: all θ, the unpadded w, then α.
    pub fn to_free_vec(&self, spec: &CircuitSpec) -> Vec<f64> {
        let mut v = self.theta.clone();
        v.extend(free_weight_slots(spec).into_iter().map(|i| self.weights[i]));
        v.extend_from_slice(&self.alpha);
        v
    }

    /// Inverse of [`to_free_vec`](Self::to_free_vec).
    pub fn from_free_vec(spec: &CircuitSpec, alpha_len: usize, v: &[f64]) -> Result<Self> {
        let free = free_weight_slots(spec);
        let n = spec.angle_len();
        let expected = n + free.len() + alpha_len;
        if v.len() != expected {
            return Err(Error::invalid(format!(
                "free parameter vector has {} entries, expected {expected}",
                v.len()
            )));
        }
        let mut p = Self::zeros(spec, alpha_len);
        p.theta.copy_from_slice(&v[..n]);
        for (k, &slot) in free.iter().enumerate() {
            p.weights[slot] = v[n + k];
        }
        p.alpha.copy_from_slice(&v[n + free.len()..]);
        Ok(p)
    }
}

/// Flat indices of weight entries that are not zero padding.
pub fn free_weight_slots(spec: &CircuitSpec) -> Vec<usize> {
    let per_layer = spec.sublayers() * 3;
    (0..spec.angle_len())
        .filter(|i| {
            let within = i % per_layer;
            !spec.is_padded(within / 3, within % 3)
        })
        .collect()
}

/// One labeled input point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: Vec<f64>,
    pub class_index: usize,
}

/// Splits `x` into `k` three-vectors, zero-padding the tail.
pub fn sublayer_split(x: &[f64], k: usize) -> Vec<[f64; 3]> {
    (0..k)
        .map(|s| {
            let mut chunk = [0.0; 3];
            for (c, v) in chunk.iter_mut().enumerate() {
                if let Some(&xv) = x.get(s * 3 + c) {
                    *v = xv;
                }
            }
            chunk
        })
        .collect()
}

/// A single gate in the flattened circuit for one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `U(phi)` on `qubit`; `slot` is the flat index of component 0 of its angles,
    /// `data` the input chunk that multiplied its weights.
    Rotation {
        qubit: usize,
        slot: usize,
        phi: [f64; 3],
        data: [f64; 3],
    },
    Cz(usize, usize),
}

impl Gate {
    pub(crate) fn apply(&self, state: &mut StateVector) {
        match *self {
            Gate::Rotation { qubit, phi, .. } => state.apply_single_unchecked(qubit, &su2_unchecked(phi)),
            Gate::Cz(a, b) => state.apply_cz_unchecked(a, b),
        }
    }
}

fn check_input(spec: &CircuitSpec, params: &ModelParams, x: &[f64]) -> Result<()> {
    spec.validate()?;
    if x.len() != spec.data_dim {
        return Err(Error::invalid(format!(
            "input has dimension {}, circuit expects {}",
            x.len(),
            spec.data_dim
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("input has non-finite components"));
    }
    let n = spec.angle_len();
    if params.theta.len() != n || params.weights.len() != n {
        return Err(Error::invalid(format!(
            "parameter shape mismatch: theta {} / weights {}, circuit needs {n}",
            params.theta.len(),
            params.weights.len()
        )));
    }
    if params.theta.iter().chain(&params.weights).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite circuit parameters"));
    }
    Ok(())
}

/// The circuit for input `x` as a gate list, grouped by layer: each inner vector
/// holds one layer's rotations (qubit-major, sublayers ascending) followed by its
/// CZ gates.
pub fn layer_gates(spec: &CircuitSpec, params: &ModelParams, x: &[f64]) -> Result<Vec<Vec<Gate>>> {
    check_input(spec, params, x)?;
    let k = spec.sublayers();
    let chunks = sublayer_split(x, k);
    let layers = (0..spec.layers)
        .map(|l| {
            let mut gates = Vec::with_capacity(spec.qubits * k + spec.qubits);
            for q in 0..spec.qubits {
                for (s, chunk) in chunks.iter().enumerate() {
                    let slot = spec.index(q, l, s, 0);
                    let phi = std::array::from_fn(|c| params.theta[slot + c] + params.weights[slot + c] * chunk[c]);
                    gates.push(Gate::Rotation {
                        qubit: q,
                        slot,
                        phi,
                        data: *chunk,
                    });
                }
            }
            gates.extend(spec.entangling_pairs(l).into_iter().map(|(a, b)| Gate::Cz(a, b)));
            gates
        })
        .collect();
    Ok(layers)
}

/// The rotation unitaries making up one layer on one qubit, in application order.
pub fn layer_unitaries(
    spec: &CircuitSpec,
    params: &ModelParams,
    layer: usize,
    qubit: usize,
    x: &[f64],
) -> Result<Vec<Unitary2>> {
    check_input(spec, params, x)?;
    if layer >= spec.layers || qubit >= spec.qubits {
        return Err(Error::invalid(format!(
            "layer {layer} / qubit {qubit} out of range for {} layers × {} qubits",
            spec.layers, spec.qubits
        )));
    }
    Ok(sublayer_split(x, spec.sublayers())
        .iter()
        .enumerate()
        .map(|(s, chunk)| {
            let slot = spec.index(qubit, layer, s, 0);
            su2_unchecked(std::array::from_fn(|c| {
                params.theta[slot + c] + params.weights[slot + c] * chunk[c]
            }))
        })
        .collect())
}

/// Final state `U(x)|0…0⟩`.
pub fn forward(spec: &CircuitSpec, params: &ModelParams, x: &[f64]) -> Result<StateVector> {
    let mut state = StateVector::zero(spec.qubits)?;
    for gate in layer_gates(spec, params, x)?.iter().flatten() {
        gate.apply(&mut state);
    }
    Ok(state)
}

/// `[|ψ_0⟩, …, |ψ_N⟩]` with `|ψ_0⟩ = |0…0⟩` and `|ψ_l⟩` the state after layer
/// `l` (including that layer's CZ gates).
pub fn forward_trace(spec: &CircuitSpec, params: &ModelParams, x: &[f64]) -> Result<Vec<StateVector>> {
    let mut state = StateVector::zero(spec.qubits)?;
    let mut trace = Vec::with_capacity(spec.layers + 1);
    trace.push(state.clone());
    for layer in layer_gates(spec, params, x)? {
        for gate in &layer {
            gate.apply(&mut state);
        }
        trace.push(state.clone());
    }
    Ok(trace)
}

/// Trainable parameter counts, reported separately for circuit angles/weights
/// and class weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub core: usize,
    pub alpha: usize,
}

impl ParamCount {
    pub fn total(&self) -> usize {
        self.core + self.alpha
    }
}

/// `Q·N·(3k + d)` circuit parameters, plus `C` class weights per measured qubit
/// for the weighted-fidelity cost.
pub fn param_count(spec: &CircuitSpec, cost_kind: CostKind, num_classes: usize, measured_qubits: usize) -> ParamCount {
    let core = spec.qubits * spec.layers * (3 * spec.sublayers() + spec.data_dim);
    let alpha = match cost_kind {
        CostKind::Fidelity => 0,
        CostKind::WeightedFidelity => num_classes * measured_qubits.max(1),
    };
    ParamCount { core, alpha }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{su2_from_angles, C64};
    use std::f64::consts::PI;

    fn spec(q: usize, n: usize, ent: bool, d: usize) -> CircuitSpec {
        CircuitSpec::new(q, n, ent, d).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(CircuitSpec::new(1, 2, true, 2).is_err());
        assert!(CircuitSpec::new(2, 0, false, 2).is_err());
        assert!(CircuitSpec::new(1, 1, false, 0).is_err());
        assert!(CircuitSpec::new(9, 1, false, 2).is_err());
        let s = spec(2, 3, true, 7);
        assert_eq!(s.sublayers(), 3);
        assert!(s.sublayers() * 3 >= s.data_dim);
    }

    #[test]
    fn split_examples() {
        assert_eq!(sublayer_split(&[0.1, 0.2], 1), vec![[0.1, 0.2, 0.0]]);
        assert_eq!(sublayer_split(&[0.1, 0.2, 0.3], 1), vec![[0.1, 0.2, 0.3]]);
        let parts = sublayer_split(&[0.1, 0.2, 0.3, 0.4], 2);
        assert_eq!(parts, vec![[0.1, 0.2, 0.3], [0.4, 0.0, 0.0]]);
        let rebuilt: Vec<f64> = parts.iter().flatten().copied().take(4).collect();
        assert_eq!(rebuilt, vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn layer_unitaries_examples() {
        let s = spec(1, 1, false, 2);
        let zero = ModelParams::zeros(&s, 0);
        let us = layer_unitaries(&s, &zero, 0, 0, &[0.3, -0.2]).unwrap();
        assert_eq!(us, vec![Unitary2::identity()]);

        let mut p = ModelParams::zeros(&s, 0);
        p.weights[0] = 1.0;
        p.weights[1] = 1.0;
        let us = layer_unitaries(&s, &p, 0, 0, &[PI, 0.0]).unwrap();
        let flip = Unitary2::from_real([[0.0, -1.0], [1.0, 0.0]]);
        assert!(us[0].phase_aligned_distance(&flip) < 1e-15 && (us[0].m[1][0] - C64::new(1.0, 0.0)).norm() < 1e-15);

        assert!(layer_unitaries(&s, &p, 1, 0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn two_sublayers_compose_to_layer_action() {
        let s = spec(1, 1, false, 4);
        let p = ModelParams::random(&s, 0, 5);
        let x = [0.3, -0.7, 0.1, 0.9];
        let us = layer_unitaries(&s, &p, 0, 0, &x).unwrap();
        assert_eq!(us.len(), 2);
        let phi = |sub: usize| -> [f64; 3] {
            std::array::from_fn(|c| {
                let xi = x.get(sub * 3 + c).copied().unwrap_or(0.0);
                p.theta[sub * 3 + c] + p.weights[sub * 3 + c] * xi
            })
        };
        let product = su2_from_angles(phi(1)).unwrap() * su2_from_angles(phi(0)).unwrap();
        let out = forward(&s, &p, &x).unwrap();
        for (i, amp) in out.amplitudes().iter().enumerate() {
            assert!((amp - product.m[i][0]).norm() < 1e-14);
        }
    }

    #[test]
    fn forward_examples() {
        let s = spec(1, 1, false, 2);
        let out = forward(&s, &ModelParams::zeros(&s, 0), &[0.0, 0.0]).unwrap();
        assert_eq!(out, StateVector::zero(1).unwrap());

        let mut p = ModelParams::zeros(&s, 0);
        p.theta[0] = PI;
        let out = forward(&s, &p, &[0.5, 0.5]).unwrap();
        assert!(out.amplitudes()[0].norm() < 1e-15);
        assert!((out.amplitudes()[1] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_layer_entangled_has_no_cz() {
        let ent = spec(2, 1, true, 2);
        let plain = spec(2, 1, false, 2);
        let p = ModelParams::random(&ent, 0, 11);
        let x = [0.4, -0.6];
        assert!(ent.entangling_pairs(0).is_empty());
        assert_eq!(forward(&ent, &p, &x).unwrap(), forward(&plain, &p, &x).unwrap());
    }

    #[test]
    fn entangling_patterns() {
        let s2 = spec(2, 3, true, 2);
        assert_eq!(s2.entangling_pairs(0), vec![(0, 1)]);
        assert_eq!(s2.entangling_pairs(1), vec![(0, 1)]);
        assert!(s2.entangling_pairs(2).is_empty());

        let s4 = spec(4, 4, true, 2);
        assert_eq!(s4.entangling_pairs(0), vec![(0, 1), (2, 3)]);
        assert_eq!(s4.entangling_pairs(1), vec![(1, 2), (0, 3)]);
        assert_eq!(s4.entangling_pairs(2), vec![(0, 1), (2, 3)]);
        assert!(s4.entangling_pairs(3).is_empty());

        let s3 = spec(3, 3, true, 2);
        assert_eq!(s3.entangling_pairs(0), vec![(0, 1)]);
        assert_eq!(s3.entangling_pairs(1), vec![(1, 2)]);

        assert!(spec(4, 4, false, 2).entangling_pairs(0).is_empty());
    }

    #[test]
    fn trace_examples() {
        let s = spec(1, 1, false, 2);
        let p = ModelParams::random(&s, 0, 3);
        let x = [0.2, 0.9];
        let tr = forward_trace(&s, &p, &x).unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr[0], StateVector::zero(1).unwrap());
        assert_eq!(tr[1], forward(&s, &p, &x).unwrap());

        let s = spec(1, 3, false, 2);
        let tr = forward_trace(&s, &ModelParams::zeros(&s, 0), &x).unwrap();
        assert_eq!(tr.len(), 4);
        assert!(tr.iter().all(|st| *st == StateVector::zero(1).unwrap()));

        let s = spec(4, 3, true, 5);
        let p = ModelParams::random(&s, 0, 9);
        let x = [0.1, -0.2, 0.3, -0.4, 0.5];
        let tr = forward_trace(&s, &p, &x).unwrap();
        let out = forward(&s, &p, &x).unwrap();
        for (a, b) in tr[3].amplitudes().iter().zip(out.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_mismatch() {
        let s = spec(1, 2, false, 2);
        let p = ModelParams::zeros(&spec(1, 3, false, 2), 0);
        assert!(forward(&s, &p, &[0.0, 0.0]).is_err());
        assert!(forward(&s, &ModelParams::zeros(&s, 0), &[0.0]).is_err());
        assert!(forward(&s, &ModelParams::zeros(&s, 0), &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn param_count_examples() {
        let wf = CostKind::WeightedFidelity;
        assert_eq!(param_count(&spec(1, 2, false, 2), wf, 2, 1).total(), 12);
        assert_eq!(param_count(&spec(4, 2, false, 2), wf, 2, 1).total(), 42);
        assert_eq!(param_count(&spec(1, 8, false, 4), wf, 2, 1).total(), 82);
        let f = param_count(&spec(1, 8, false, 4), CostKind::Fidelity, 2, 1);
        assert_eq!(f, ParamCount { core: 80, alpha: 0 });
    }

    #[test]
    fn random_init_respects_padding_and_ranges() {
        let s = spec(2, 3, false, 4);
        let p = ModelParams::random(&s, 4, 1);
        p.check_shape(&s, 4).unwrap();
        for q in 0..2 {
            for l in 0..3 {
                for c in 1..3 {
                    assert_eq!(p.weights[s.index(q, l, 1, c)], 0.0);
                }
                assert_ne!(p.weights[s.index(q, l, 1, 0)], 0.0);
            }
        }
        assert!(p.theta.iter().all(|t| (0.0..TAU).contains(t)));
        assert!(p.weights.iter().all(|w| (-1.0..1.0).contains(w)));
        assert_eq!(p.alpha, vec![1.0; 4]);
        assert_eq!(p, ModelParams::random(&s, 4, 1));
    }

    #[test]
    fn free_vector_round_trip() {
        let s = spec(2, 2, true, 4);
        let p = ModelParams::random(&s, 3, 8);
        let v = p.to_free_vec(&s);
        let core = param_count(&s, CostKind::WeightedFidelity, 3, 1);
        assert_eq!(v.len(), core.total());
        assert_eq!(ModelParams::from_free_vec(&s, 3, &v).unwrap(), p);
        assert!(ModelParams::from_free_vec(&s, 3, &v[1..]).is_err());
    }

    #[test]
    fn shape_check_catches_padding() {
        let s = spec(1, 1, false, 2);
        let mut p = ModelParams::zeros(&s, 0);
        p.weights[2] = 0.5;
        assert!(p.check_shape(&s, 0).is_err());
        assert!(ModelParams::zeros(&s, 0).check_shape(&s, 2).is_err());
    }
}
