//! Gradients of the training costs.
//!
//! Three independent routes:
//! - [`grad_fidelity_backprop`]: forward states `|ψ_l⟩` and backward bras
//!   `⟨Δ_l|` for the single-qubit fidelity cost, using the π-shifted gate as the
//!   exact derivative matrix `∂U/∂φ_i = ½ U(φ + π e_i)`.
//! - [`grad_parameter_shift`]: for every gate angle, re-runs the circuit with
//!   the angle shifted by `±π/2` and differentiates the readout fidelities with
//!   the two-term rule. Works for both costs and any register.
//! - [`grad_finite_difference`]: central differences, used as a test oracle.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::circuit::{free_weight_slots, layer_gates, CircuitSpec, DataPoint, Gate, ModelParams};
use crate::error::{Error, Result};
use crate::objective::{point_cost, readout_fidelities, LabelSet, ObjectiveConfig};
use crate::qmath::{su2_from_angles, su2_unchecked, StateVector, Unitary2};

/// Same layout as [`ModelParams`]. Padded weight entries stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl Gradient {
    pub fn zeros(spec: &CircuitSpec, alpha_len: usize) -> Self {
        Self {
            theta: vec![0.0; spec.angle_len()],
            weights: vec![0.0; spec.angle_len()],
            alpha: vec![0.0; alpha_len],
        }
    }

    fn add(&mut self, other: &Gradient) {
        for (a, b) in self
            .theta
            .iter_mut()
            .chain(self.weights.iter_mut())
            .chain(self.alpha.iter_mut())
            .zip(other.theta.iter().chain(&other.weights).chain(&other.alpha))
        {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.theta
            .iter_mut()
            .chain(self.weights.iter_mut())
            .chain(self.alpha.iter_mut())
            .for_each(|v| *v *= s);
    }

    /// Free coordinates in [`ModelParams::to_free_vec`] order.
    pub fn to_free_vec(&self, spec: &CircuitSpec) -> Vec<f64> {
        let mut v = self.theta.clone();
        v.extend(free_weight_slots(spec).into_iter().map(|i| self.weights[i]));
        v.extend_from_slice(&self.alpha);
        v
    }

    /// All entries in `theta, weights, alpha` order.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.theta.iter().chain(&self.weights).chain(&self.alpha)
    }
}

/// `½ U(φ + π e_i)` for component `i ∈ {0, 1, 2}`, the derivative of the gate
/// with respect to `φ_i`. Not unitary; only used inside inner products.
pub fn shifted_unitary_derivative(phi: [f64; 3], i: usize) -> Result<Unitary2> {
    if i >= 3 {
        return Err(Error::invalid(format!("angle component {i} out of range 0..3")));
    }
    let mut shifted = phi;
    shifted[i] += PI;
    Ok(su2_from_angles(shifted)?.scale(0.5))
}

fn rotation_parts(g: &Gate) -> Option<(usize, usize, [f64; 3], [f64; 3])> {
    match *g {
        Gate::Rotation { qubit, slot, phi, data } => Some((qubit, slot, phi, data)),
        Gate::Cz(..) => None,
    }
}

/// Exact gradient of `1 - |⟨label|ψ(x)⟩|²` for a single-qubit circuit.
pub fn grad_fidelity_backprop(
    spec: &CircuitSpec,
    params: &ModelParams,
    x: &[f64],
    label: &StateVector,
) -> Result<Gradient> {
    Ok(backprop_point(spec, params, x, label)?.1)
}

/// Cost term and gradient for one point, by backpropagation.
fn backprop_point(spec: &CircuitSpec, params: &ModelParams, x: &[f64], label: &StateVector) -> Result<(f64, Gradient)> {
    if spec.qubits != 1 {
        return Err(Error::Unsupported(format!(
            "backpropagation is derived for one qubit, circuit has {}",
            spec.qubits
        )));
    }
    if label.qubits() != 1 {
        return Err(Error::invalid("label must be a single-qubit state"));
    }
    let gates: Vec<_> = layer_gates(spec, params, x)?
        .into_iter()
        .flatten()
        .filter_map(|g| rotation_parts(&g))
        .collect();

    // psi[j]: state after the first j gates
    let mut psi = Vec::with_capacity(gates.len() + 1);
    let mut state = StateVector::zero(1)?;
    psi.push(state.clone());
    let unitaries: Vec<_> = gates.iter().map(|g| su2_unchecked(g.2)).collect();
    for u in &unitaries {
        state.apply_single_unchecked(0, u);
        psi.push(state.clone());
    }
    let overlap = label.inner_unchecked(&state);

    let mut grad = Gradient::zeros(spec, params.alpha.len());
    // delta holds |Δ_j⟩ with ⟨Δ_j| = ⟨label| U_G ⋯ U_{j+1}
    let mut delta = label.clone();
    for j in (0..gates.len()).rev() {
        let (_, slot, phi, data) = gates[j];
        for c in 0..3 {
            let mut shifted = phi;
            shifted[c] += PI;
            let mut d_state = psi[j].clone();
            d_state.apply_single_unchecked(0, &su2_unchecked(shifted).scale(0.5));
            let d_overlap = delta.inner_unchecked(&d_state);
            let g = -2.0 * (d_overlap * overlap.conj()).re;
            grad.theta[slot + c] += g;
            grad.weights[slot + c] += g * data[c];
        }
        delta.apply_single_unchecked(0, &unitaries[j].adjoint());
    }
    zero_padding(spec, &mut grad);
    Ok((1.0 - overlap.norm_sqr(), grad))
}

fn zero_padding(spec: &CircuitSpec, grad: &mut Gradient) {
    let per_layer = spec.sublayers() * 3;
    for (i, w) in grad.weights.iter_mut().enumerate() {
        let within = i % per_layer;
        if spec.is_padded(within / 3, within % 3) {
            *w = 0.0;
        }
    }
}

/// Cost term and gradient for one point, by the two-term shift rule.
fn shift_point(
    spec: &CircuitSpec,
    params: &ModelParams,
    point: &DataPoint,
    labels: &LabelSet,
    cfg: &ObjectiveConfig,
) -> Result<(f64, Gradient)> {
    if point.class_index >= labels.num_classes() {
        return Err(Error::invalid(format!(
            "class index {} out of range for {} labels",
            point.class_index,
            labels.num_classes()
        )));
    }
    let gates: Vec<Gate> = layer_gates(spec, params, &point.x)?.into_iter().flatten().collect();

    // prefix[j]: state before gate j
    let mut prefix = Vec::with_capacity(gates.len() + 1);
    let mut state = StateVector::zero(spec.qubits)?;
    for g in &gates {
        prefix.push(state.clone());
        g.apply(&mut state);
    }
    let fid = readout_fidelities(&state, labels, cfg);
    let (cost, d_fid, d_alpha) = point_cost(&fid, point.class_index, labels, cfg, &params.alpha);

    let mut grad = Gradient::zeros(spec, params.alpha.len());
    grad.alpha.copy_from_slice(&d_alpha);

    let run_shifted = |j: usize, qubit: usize, phi: [f64; 3]| {
        let mut s = prefix[j].clone();
        s.apply_single_unchecked(qubit, &su2_unchecked(phi));
        for g in &gates[j + 1..] {
            g.apply(&mut s);
        }
        readout_fidelities(&s, labels, cfg)
    };

    for (j, g) in gates.iter().enumerate() {
        let Some((qubit, slot, phi, data)) = rotation_parts(g) else {
            continue;
        };
        for c in 0..3 {
            let mut plus = phi;
            plus[c] += FRAC_PI_2;
            let mut minus = phi;
            minus[c] -= FRAC_PI_2;
            let f_plus = run_shifted(j, qubit, plus);
            let f_minus = run_shifted(j, qubit, minus);
            let d: f64 = d_fid
                .iter()
                .zip(f_plus.iter().zip(&f_minus))
                .map(|(w, (p, m))| w * 0.5 * (p - m))
                .sum();
            grad.theta[slot + c] += d;
            grad.weights[slot + c] += d * data[c];
        }
    }
    zero_padding(spec, &mut grad);
    Ok((cost, grad))
}

fn sum_in_order(spec: &CircuitSpec, alpha_len: usize, parts: Vec<(f64, Gradient)>) -> (f64, Gradient) {
    let mut total = Gradient::zeros(spec, alpha_len);
    let mut cost = 0.0;
    for (c, g) in &parts {
        cost += c;
        total.add(g);
    }
    (cost, total)
}

/// Cost and parameter-shift gradient summed over `data` (in dataset order).
pub fn cost_and_grad_parameter_shift(
    spec: &CircuitSpec,
    params: &ModelParams,
    data: &[DataPoint],
    labels: &LabelSet,
    cfg: &ObjectiveConfig,
) -> Result<(f64, Gradient)> {
    cfg.validate(spec.qubits, labels.num_classes())?;
    params.check_shape(spec, cfg.alpha_len(labels.num_classes()))?;
    let parts = data
        .par_iter()
        .map(|p| shift_point(spec, params, p, labels, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(sum_in_order(spec, params.alpha.len(), parts))
}

/// Gradient of the configured cost over `data` via parameter shifts, with
/// closed-form `α` partials `Σ_μ (α F - Y) F`.
pub fn grad_parameter_shift(
    spec: &CircuitSpec,
    params: &ModelParams,
    data: &[DataPoint],
    labels: &LabelSet,
    cfg: &ObjectiveConfig,
) -> Result<Gradient> {
    Ok(cost_and_grad_parameter_shift(spec, params, data, labels, cfg)?.1)
}

/// Cost and backpropagated gradient of the single-qubit fidelity cost over `data`.
pub fn cost_and_grad_backprop(
    spec: &CircuitSpec,
    params: &ModelParams,
    data: &[DataPoint],
    labels: &LabelSet,
) -> Result<(f64, Gradient)> {
    let parts = data
        .par_iter()
        .map(|p| {
            let label = labels
                .states
                .get(p.class_index)
                .ok_or_else(|| Error::invalid(format!("class index {} out of range", p.class_index)))?;
            backprop_point(spec, params, &p.x, label)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sum_in_order(spec, params.alpha.len(), parts))
}

/// Central differences `(f(p + h e_i) - f(p - h e_i)) / 2h` for every coordinate.
pub fn grad_finite_difference<F>(mut f: F, p: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::invalid(format!(
            "finite-difference step {h} outside [1e-7, 1e-3]"
        )));
    }
    let mut work = p.to_vec();
    Ok((0..p.len())
        .map(|i| {
            work[i] = p[i] + h;
            let up = f(&work);
            work[i] = p[i] - h;
            let down = f(&work);
            work[i] = p[i];
            (up - down) / (2.0 * h)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{cost, label_states, CostKind, Strategy};
    use crate::qmath::C64;

    #[test]
    fn shifted_derivative_examples() {
        let d = shifted_unitary_derivative([0.0; 3], 0).unwrap();
        let want = Unitary2::from_real([[0.0, -0.5], [0.5, 0.0]]);
        assert!(d.phase_aligned_distance(&want) < 1e-15);
        assert!((d.m[1][0] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(shifted_unitary_derivative([0.0; 3], 3).is_err());
    }

    #[test]
    fn shifted_derivative_matches_analytic_entries() {
        // entrywise derivative of the closed-form gate
        let phi: [f64; 3] = [0.7, -1.3, 2.1];
        let (s, c) = (0.5 * phi[0]).sin_cos();
        let sum = 0.5 * (phi[1] + phi[2]);
        let diff = 0.5 * (phi[1] - phi[2]);
        let e = |a: f64| C64::from_polar(1.0, a);
        let i = C64::new(0.0, 1.0);
        let analytic = [
            [
                [e(sum) * (-0.5 * s), -e(-diff) * (0.5 * c)],
                [e(diff) * (0.5 * c), e(-sum) * (-0.5 * s)],
            ],
            [
                [i * 0.5 * c * e(sum), -(-i * 0.5) * s * e(-diff)],
                [i * 0.5 * s * e(diff), -i * 0.5 * c * e(-sum)],
            ],
            [
                [i * 0.5 * c * e(sum), -(i * 0.5) * s * e(-diff)],
                [-i * 0.5 * s * e(diff), -i * 0.5 * c * e(-sum)],
            ],
        ];
        for (k, want) in analytic.iter().enumerate() {
            let got = shifted_unitary_derivative(phi, k).unwrap();
            for (got_row, want_row) in got.m.iter().zip(want) {
                for (a, b) in got_row.iter().zip(want_row) {
                    assert!((a - b).norm() < 1e-12, "component {k}");
                }
            }
        }
    }

    #[test]
    fn backprop_single_layer_identity() {
        // 1 - cos²(φ1/2) has zero slope at φ = 0
        let spec = CircuitSpec::new(1, 1, false, 2).unwrap();
        let p = ModelParams::zeros(&spec, 0);
        let g = grad_fidelity_backprop(&spec, &p, &[0.4, 0.1], &StateVector::zero(1).unwrap()).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn backprop_stationary_at_label() {
        let spec = CircuitSpec::new(1, 3, false, 2).unwrap();
        let mut p = ModelParams::random(&spec, 0, 2);
        p.weights.iter_mut().for_each(|w| *w = 0.0);
        let out = crate::circuit::forward(&spec, &p, &[0.0, 0.0]).unwrap();
        let g = grad_fidelity_backprop(&spec, &p, &[0.3, -0.8], &out).unwrap();
        assert!(g.theta.iter().all(|v| v.abs() < 1e-10), "{g:?}");
    }

    #[test]
    fn backprop_rejects_multi_qubit() {
        let spec = CircuitSpec::new(2, 1, false, 2).unwrap();
        let p = ModelParams::zeros(&spec, 0);
        let r = grad_fidelity_backprop(&spec, &p, &[0.0, 0.0], &StateVector::zero(1).unwrap());
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn finite_difference_quadratic() {
        let p = [0.5, -1.5, 2.0];
        let g = grad_finite_difference(|v| v.iter().map(|x| x * x).sum(), &p, 1e-4).unwrap();
        for (gi, pi) in g.iter().zip(p) {
            assert!((gi - 2.0 * pi).abs() < 1e-8);
        }
        assert!(grad_finite_difference(|v| v[0], &p, 1e-2).is_err());
    }

    #[test]
    fn zero_gradient_at_target() {
        // every point already sits on its label: fidelity cost is at its minimum
        let spec = CircuitSpec::new(1, 2, false, 2).unwrap();
        let p = ModelParams::zeros(&spec, 0);
        let labels = label_states(2, 1, Strategy::MeasuredQubits).unwrap();
        let cfg = ObjectiveConfig::new(CostKind::Fidelity, 1);
        let data: Vec<_> = (0..4)
            .map(|i| DataPoint {
                x: vec![0.1 * i as f64, -0.2],
                class_index: 0,
            })
            .collect();
        let g = grad_parameter_shift(&spec, &p, &data, &labels, &cfg).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn alpha_partial_vanishes_at_exact_fit() {
        let spec = CircuitSpec::new(1, 1, false, 2).unwrap();
        let p = ModelParams::zeros(&spec, 4);
        let labels = label_states(4, 1, Strategy::MeasuredQubits).unwrap();
        let cfg = ObjectiveConfig::new(CostKind::WeightedFidelity, 1);
        let data = [DataPoint {
            x: vec![0.5, 0.5],
            class_index: 0,
        }];
        let g = grad_parameter_shift(&spec, &p, &data, &labels, &cfg).unwrap();
        assert!(g.alpha.iter().all(|v| v.abs() < 1e-12), "{:?}", g.alpha);
    }

    #[test]
    fn parameter_shift_matches_finite_difference_multi_qubit() {
        let spec = CircuitSpec::new(2, 3, true, 4).unwrap();
        let labels = label_states(2, 1, Strategy::MeasuredQubits).unwrap();
        let cfg = ObjectiveConfig::new(CostKind::WeightedFidelity, 2);
        let alpha_len = cfg.alpha_len(2);
        let mut p = ModelParams::random(&spec, alpha_len, 17);
        p.alpha = vec![0.9, 1.1, 0.7, 1.3];
        let data = vec![
            DataPoint {
                x: vec![0.2, -0.5, 0.9, 0.1],
                class_index: 1,
            },
            DataPoint {
                x: vec![-0.7, 0.3, 0.0, -0.4],
                class_index: 0,
            },
        ];
        let g = grad_parameter_shift(&spec, &p, &data, &labels, &cfg).unwrap();
        let fd = grad_finite_difference(
            |v| {
                let q = ModelParams::from_free_vec(&spec, alpha_len, v).unwrap();
                cost(&data, &spec, &q, &labels, &cfg).unwrap()
            },
            &p.to_free_vec(&spec),
            1e-5,
        )
        .unwrap();
        for (a, b) in g.to_free_vec(&spec).iter().zip(&fd) {
            assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn padded_weights_get_no_gradient() {
        let spec = CircuitSpec::new(1, 2, false, 2).unwrap();
        let p = ModelParams::random(&spec, 0, 5);
        let label = StateVector::basis(1, 1).unwrap();
        let g = grad_fidelity_backprop(&spec, &p, &[0.3, 0.6], &label).unwrap();
        assert_eq!(g.weights[2], 0.0);
        assert_eq!(g.weights[5], 0.0);
    }
}
