//! Dense complex linear algebra for small qubit registers.
//!
//! Everything here works on explicit amplitude vectors of length `2^Q`. Qubit 0
//! is the most significant bit of a basis index, so `|q0 q1 ... q(Q-1)⟩` maps to
//! the integer whose binary digits read `q0 q1 ...` from left to right.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Largest register the simulator accepts. Only up to 4 qubits is exercised.
pub const MAX_QUBITS: usize = 8;

/// Threshold on `cos²d` past which the axis-angle normalization is treated as singular.
const AXIS_SINGULAR_COS2: f64 = 1.0 - 1e-12;

/// A 2×2 complex matrix, row-major. Constructed through [`su2_from_angles`] it is
/// always special unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub m: [[C64; 2]; 2],
}

impl Unitary2 {
    pub const fn new(m: [[C64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self::new([
            [C64::new(m[0][0], 0.0), C64::new(m[0][1], 0.0)],
            [C64::new(m[1][0], 0.0), C64::new(m[1][1], 0.0)],
        ])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    /// Largest entrywise modulus of `U†U - I`.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint() * *self;
        let id = Self::identity();
        max_entry_diff(&p, &id)
    }

    /// Whether `self = e^{iγ} other` for some global phase γ, entrywise within `tol`.
    pub fn approx_eq_up_to_phase(&self, other: &Unitary2, tol: f64) -> bool {
        self.phase_aligned_distance(other) <= tol
    }

    /// Entrywise distance after removing the best-fitting global phase.
    pub fn phase_aligned_distance(&self, other: &Unitary2) -> f64 {
        let overlap: C64 = self
            .m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        let mut aligned = *self;
        aligned.m.iter_mut().flatten().for_each(|z| *z *= phase);
        max_entry_diff(&aligned, other)
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        let (a, b) = (&self.m, &rhs.m);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Unitary2::new(out)
    }
}

fn max_entry_diff(a: &Unitary2, b: &Unitary2) -> f64 {
    a.m.iter()
        .flatten()
        .zip(b.m.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn check_finite(phi: &[f64; 3]) -> Result<()> {
    if phi.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("non-finite rotation angles {phi:?}")))
    }
}

/// The three-angle SU(2) gate
///
/// ```text
/// ⎛ cos(φ1/2) e^{ i(φ2+φ3)/2}   -sin(φ1/2) e^{-i(φ2-φ3)/2} ⎞
/// ⎝ sin(φ1/2) e^{ i(φ2-φ3)/2}    cos(φ1/2) e^{-i(φ2+φ3)/2} ⎠
/// ```
pub fn su2_from_angles(phi: [f64; 3]) -> Result<Unitary2> {
    check_finite(&phi)?;
    Ok(su2_unchecked(phi))
}

/// Same as [`su2_from_angles`] without the finiteness check; for inner loops
/// whose angles are already validated.
pub(crate) fn su2_unchecked(phi: [f64; 3]) -> Unitary2 {
    let (s, c) = (0.5 * phi[0]).sin_cos();
    let sum = 0.5 * (phi[1] + phi[2]);
    let diff = 0.5 * (phi[1] - phi[2]);
    let e_sum = C64::from_polar(1.0, sum);
    let e_diff = C64::from_polar(1.0, diff);
    Unitary2::new([[e_sum * c, -e_diff.conj() * s], [e_diff * s, e_sum.conj() * c]])
}

/// Rotation written as `U = exp(i ω·σ)` with `|ω| = d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub omega: [f64; 3],
    /// Rotation half-angle `d ∈ [0, π]`, with `cos d = Re U00`.
    pub angle_d: f64,
    /// `1/sin d`; infinite at the singular points `U = ±I`.
    pub norm_factor: f64,
}

/// Axis-angle form of [`su2_from_angles`]`(phi)`.
///
/// `cos d = cos((φ2+φ3)/2) cos(φ1/2)` and `ω = d 𝒩 (n1, n2, n3)` with
/// `n1 = sin((φ2-φ3)/2) sin(φ1/2)`, `n2 = -cos((φ2-φ3)/2) sin(φ1/2)`,
/// `n3 = sin((φ2+φ3)/2) cos(φ1/2)`. The minus sign on `n2` is what makes
/// `exp(i ω·σ)` reproduce the gate above with the standard Pauli `σ_y`.
///
/// Near `U = ±I` (`cos²d ≥ 1 - 1e-12`) any axis works: we return `ω = 0`
/// for `+I` and `ω = (π, 0, 0)` for `-I`.
pub fn axis_angle(phi: [f64; 3]) -> Result<AxisAngle> {
    check_finite(&phi)?;
    let (s1, c1) = (0.5 * phi[0]).sin_cos();
    let (s_sum, c_sum) = (0.5 * (phi[1] + phi[2])).sin_cos();
    let (s_diff, c_diff) = (0.5 * (phi[1] - phi[2])).sin_cos();

    let cos_d = c_sum * c1;
    if cos_d * cos_d >= AXIS_SINGULAR_COS2 {
        let (omega, angle_d) = if cos_d > 0.0 {
            ([0.0; 3], 0.0)
        } else {
            ([PI, 0.0, 0.0], PI)
        };
        return Ok(AxisAngle {
            omega,
            angle_d,
            norm_factor: f64::INFINITY,
        });
    }

    let n = [s_diff * s1, -c_diff * s1, s_sum * c1];
    // sin d from the vector part rather than sqrt(1 - cos²d): no cancellation near ±I
    let sin_d = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let angle_d = sin_d.atan2(cos_d);
    let norm_factor = 1.0 / sin_d;
    Ok(AxisAngle {
        omega: n.map(|v| angle_d * norm_factor * v),
        angle_d,
        norm_factor,
    })
}

/// `exp(i ω·σ) = cos|ω| I + i sin|ω| (ω̂·σ)`.
pub fn unitary_from_axis_angle(aa: &AxisAngle) -> Unitary2 {
    let [w1, w2, w3] = aa.omega;
    let len = (w1 * w1 + w2 * w2 + w3 * w3).sqrt();
    if len == 0.0 {
        return Unitary2::identity();
    }
    let (s, c) = len.sin_cos();
    let k = s / len;
    let (a, b, z) = (k * w1, k * w2, k * w3);
    // i(a σx + b σy + z σz) = [[iz, ia + b], [ia - b, -iz]]
    Unitary2::new([[C64::new(c, z), C64::new(b, a)], [C64::new(-b, a), C64::new(c, -z)]])
}

/// Pure state of a `Q`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Result<Self> {
        Self::basis(qubits, 0)
    }

    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        check_qubits(qubits)?;
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { qubits, amps })
    }

    /// Wraps raw amplitudes. The length must be a power of two; normalization is
    /// the caller's responsibility.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude vector length {dim} is not a power of two ≥ 2"
            )));
        }
        let qubits = dim.trailing_zeros() as usize;
        check_qubits(qubits)?;
        Ok(Self { qubits, amps })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.qubits != other.qubits {
            return Err(Error::invalid(format!(
                "inner product of {}- and {}-qubit states",
                self.qubits, other.qubits
            )));
        }
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit < self.qubits {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "qubit {qubit} out of range for a {}-qubit register",
                self.qubits
            )))
        }
    }

    /// Applies `u` to one tensor factor, in place.
    pub fn apply_single_qubit(&mut self, qubit: usize, u: &Unitary2) -> Result<()> {
        self.check_qubit(qubit)?;
        self.apply_single_unchecked(qubit, u);
        Ok(())
    }

    pub(crate) fn apply_single_unchecked(&mut self, qubit: usize, u: &Unitary2) {
        let bit = self.bit(qubit);
        let [[u00, u01], [u10, u11]] = u.m;
        for i in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let j = i | bit;
            let (a0, a1) = (self.amps[i], self.amps[j]);
            self.amps[i] = u00 * a0 + u01 * a1;
            self.amps[j] = u10 * a0 + u11 * a1;
        }
    }

    /// Controlled-Z between `a` and `b`: negates every amplitude with both bits set.
    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::invalid(format!("CZ needs two distinct qubits, got {a} twice")));
        }
        self.apply_cz_unchecked(a, b);
        Ok(())
    }

    pub(crate) fn apply_cz_unchecked(&mut self, a: usize, b: usize) {
        let mask = self.bit(a) | self.bit(b);
        self.amps
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| i & mask == mask)
            .for_each(|(_, z)| *z = -*z);
    }

    /// Reduced state of one qubit, tracing out all the others.
    pub fn reduced_density(&self, qubit: usize) -> Result<DensityMatrix2> {
        self.check_qubit(qubit)?;
        Ok(self.reduced_density_unchecked(qubit))
    }

    pub(crate) fn reduced_density_unchecked(&self, qubit: usize) -> DensityMatrix2 {
        let bit = self.bit(qubit);
        let (mut r00, mut r11, mut r01) = (0.0, 0.0, ZERO);
        for i in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let (a0, a1) = (self.amps[i], self.amps[i | bit]);
            r00 += a0.norm_sqr();
            r11 += a1.norm_sqr();
            r01 += a0 * a1.conj();
        }
        DensityMatrix2 {
            m: [[C64::new(r00, 0.0), r01], [r01.conj(), C64::new(r11, 0.0)]],
        }
    }

    /// Probability of measuring qubit 0 of a single-qubit state in `|0⟩`.
    pub fn prob_zero(&self) -> f64 {
        self.reduced_density_unchecked(0).m[0][0].re
    }
}

fn check_qubits(qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&qubits) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "register size {qubits} outside 1..={MAX_QUBITS}"
        )))
    }
}

/// One-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    pub m: [[C64; 2]; 2],
}

impl DensityMatrix2 {
    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let m = &self.m;
        (m[0][0] * m[0][0] + m[0][1] * m[1][0] + m[1][0] * m[0][1] + m[1][1] * m[1][1]).re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.m;
        [
            (m[0][0] - m[0][0].conj()).norm(),
            (m[1][1] - m[1][1].conj()).norm(),
            (m[0][1] - m[1][0].conj()).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Smaller eigenvalue, `(1 - sqrt(2 Tr ρ² - 1)) / 2` scaled for the actual trace.
    pub fn min_eigenvalue(&self) -> f64 {
        let t = self.trace().re;
        let det = (self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]).re;
        let disc = (t * t - 4.0 * det).max(0.0);
        0.5 * (t - disc.sqrt())
    }
}

/// `|⟨a|b⟩|²` for two normalized states of the same size.
pub fn fidelity_pure(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `⟨label|ρ|label⟩` for a one-qubit label state.
pub fn fidelity_mixed(label: &StateVector, rho: &DensityMatrix2) -> Result<f64> {
    if label.qubits() != 1 {
        return Err(Error::invalid(format!(
            "mixed-state fidelity needs a 1-qubit label, got {} qubits",
            label.qubits()
        )));
    }
    Ok(fidelity_mixed_unchecked(label.amplitudes(), rho))
}

pub(crate) fn fidelity_mixed_unchecked(l: &[C64], rho: &DensityMatrix2) -> f64 {
    let m = &rho.m;
    let v0 = m[0][0] * l[0] + m[0][1] * l[1];
    let v1 = m[1][0] * l[0] + m[1][1] * l[1];
    (l[0].conj() * v0 + l[1].conj() * v1).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn state(amps: &[(f64, f64)]) -> StateVector {
        StateVector::from_amplitudes(amps.iter().map(|&(r, i)| c(r, i)).collect()).unwrap()
    }

    fn assert_unitary_eq(a: &Unitary2, b: &Unitary2, tol: f64) {
        let d = max_entry_diff(a, b);
        assert!(d <= tol, "matrices differ by {d}: {a:?} vs {b:?}");
    }

    #[test]
    fn su2_examples() {
        assert_unitary_eq(&su2_from_angles([0.0; 3]).unwrap(), &Unitary2::identity(), 1e-15);
        let flip = Unitary2::from_real([[0.0, -1.0], [1.0, 0.0]]);
        assert_unitary_eq(&su2_from_angles([PI, 0.0, 0.0]).unwrap(), &flip, 1e-15);
        let diag = Unitary2::new([[c(0.0, 1.0), ZERO], [ZERO, c(0.0, -1.0)]]);
        assert_unitary_eq(&su2_from_angles([0.0, FRAC_PI_2, FRAC_PI_2]).unwrap(), &diag, 1e-15);
    }

    #[test]
    fn su2_rejects_non_finite() {
        assert!(matches!(
            su2_from_angles([f64::NAN, 0.0, 0.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(axis_angle([0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn su2_is_special_unitary() {
        let u = su2_from_angles([0.3, -1.7, 2.9]).unwrap();
        assert!(u.unitarity_error() < 1e-12);
        assert!((u.det().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_angle_examples() {
        // Sign of ω2 follows the gate's own σ_y orientation: exp(-i π/2 σy) is the flip matrix.
        let aa = axis_angle([PI, 0.0, 0.0]).unwrap();
        let expected = [0.0, -FRAC_PI_2, 0.0];
        for (a, e) in aa.omega.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{:?}", aa.omega);
        }
        assert!((aa.norm_factor - 1.0).abs() < 1e-12);
        let u = unitary_from_axis_angle(&aa);
        assert_unitary_eq(&u, &su2_from_angles([PI, 0.0, 0.0]).unwrap(), 1e-12);

        let aa = axis_angle([0.0, FRAC_PI_2, FRAC_PI_2]).unwrap();
        assert!((aa.angle_d - FRAC_PI_2).abs() < 1e-12);
        assert!((aa.norm_factor - 1.0).abs() < 1e-12);
        for (a, e) in aa.omega.iter().zip([0.0, 0.0, FRAC_PI_2]) {
            assert!((a - e).abs() < 1e-12, "{:?}", aa.omega);
        }

        let aa = axis_angle([0.0; 3]).unwrap();
        assert_eq!(aa.omega, [0.0; 3]);
        assert!(aa.norm_factor.is_infinite());
    }

    #[test]
    fn axis_angle_minus_identity() {
        // φ1 = 2π gives -I
        let aa = axis_angle([2.0 * PI, 0.0, 0.0]).unwrap();
        assert_eq!(aa.omega, [PI, 0.0, 0.0]);
        let u = unitary_from_axis_angle(&aa);
        assert_unitary_eq(&u, &Unitary2::identity().scale(-1.0), 1e-12);
    }

    #[test]
    fn norm_factor_matches_closed_form() {
        let phi = [1.1, 0.4, -2.3];
        let aa = axis_angle(phi).unwrap();
        let cos_d = (0.5 * (phi[1] + phi[2])).cos() * (0.5 * phi[0]).cos();
        let expected = 1.0 / (1.0 - cos_d * cos_d).sqrt();
        assert!((aa.norm_factor - expected).abs() < 1e-12 * expected);
        assert!((aa.angle_d.cos() - cos_d).abs() < 1e-12);
    }

    #[test]
    fn exponential_examples() {
        let id = unitary_from_axis_angle(&AxisAngle {
            omega: [0.0; 3],
            angle_d: 0.0,
            norm_factor: f64::INFINITY,
        });
        assert_unitary_eq(&id, &Unitary2::identity(), 0.0);

        // exp(i π/2 σy) = iσy, the flip matrix up to a global sign
        let u = unitary_from_axis_angle(&AxisAngle {
            omega: [0.0, FRAC_PI_2, 0.0],
            angle_d: FRAC_PI_2,
            norm_factor: 1.0,
        });
        let flip = Unitary2::from_real([[0.0, -1.0], [1.0, 0.0]]);
        assert!(u.approx_eq_up_to_phase(&flip, 1e-12));

        let u = unitary_from_axis_angle(&AxisAngle {
            omega: [PI, 0.0, 0.0],
            angle_d: PI,
            norm_factor: f64::INFINITY,
        });
        assert_unitary_eq(&u, &Unitary2::identity().scale(-1.0), 1e-12);
    }

    #[test]
    fn single_qubit_application() {
        let flip = Unitary2::from_real([[0.0, -1.0], [1.0, 0.0]]);
        let mut s = StateVector::zero(1).unwrap();
        s.apply_single_qubit(0, &flip).unwrap();
        assert_eq!(s, state(&[(0.0, 0.0), (1.0, 0.0)]));

        let mut s = StateVector::zero(2).unwrap();
        s.apply_single_qubit(1, &Unitary2::identity()).unwrap();
        assert_eq!(s, StateVector::zero(2).unwrap());

        let h = Unitary2::from_real([[FRAC_1_SQRT_2, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2]]);
        let mut s = StateVector::zero(2).unwrap();
        s.apply_single_qubit(0, &h).unwrap();
        // (H ⊗ I)|00⟩ by explicit Kronecker product
        let mut kron = [[0.0; 4]; 4];
        for (i, row) in kron.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let hv = h.m[i / 2][j / 2].re;
                *v = if i % 2 == j % 2 { hv } else { 0.0 };
            }
        }
        for (i, amp) in s.amplitudes().iter().enumerate() {
            assert!((amp.re - kron[i][0]).abs() < 1e-15 && amp.im == 0.0);
        }
        assert!((s.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitudes()[2].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn qubit_out_of_range() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(s.apply_single_qubit(2, &Unitary2::identity()).is_err());
        assert!(s.reduced_density(5).is_err());
        assert!(s.apply_cz(0, 0).is_err());
        assert!(s.apply_cz(0, 2).is_err());
        assert!(StateVector::zero(0).is_err());
        assert!(StateVector::from_amplitudes(vec![ONE; 3]).is_err());
    }

    #[test]
    fn cz_examples() {
        let mut s = StateVector::basis(2, 3).unwrap();
        s.apply_cz(0, 1).unwrap();
        assert_eq!(s.amplitudes()[3], -ONE);

        let mut s = StateVector::zero(2).unwrap();
        s.apply_cz(0, 1).unwrap();
        assert_eq!(s, StateVector::zero(2).unwrap());

        let r = FRAC_1_SQRT_2;
        let mut s = state(&[(0.0, 0.0), (r, 0.0), (0.0, 0.0), (r, 0.0)]);
        s.apply_cz(1, 0).unwrap();
        assert_eq!(s, state(&[(0.0, 0.0), (r, 0.0), (0.0, 0.0), (-r, 0.0)]));
    }

    #[test]
    fn reduced_density_examples() {
        let rho = StateVector::zero(2).unwrap().reduced_density(0).unwrap();
        assert_eq!(rho.m, [[ONE, ZERO], [ZERO, ZERO]]);

        let r = FRAC_1_SQRT_2;
        let bell = state(&[(r, 0.0), (0.0, 0.0), (0.0, 0.0), (r, 0.0)]);
        let rho = bell.reduced_density(0).unwrap();
        assert!((rho.m[0][0].re - 0.5).abs() < 1e-15 && (rho.m[1][1].re - 0.5).abs() < 1e-15);
        assert!(rho.m[0][1].norm() < 1e-15);

        // (|00⟩+|10⟩)/√2 = |+⟩|0⟩, explicit sum ρ_ab = Σ_k ψ(a,k) ψ*(b,k)
        let plus = state(&[(r, 0.0), (0.0, 0.0), (r, 0.0), (0.0, 0.0)]);
        let rho = plus.reduced_density(0).unwrap();
        for row in rho.m {
            for v in row {
                assert!((v - c(0.5, 0.0)).norm() < 1e-15);
            }
        }
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let rho1 = plus.reduced_density(1).unwrap();
        assert!((rho1.m[0][0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let z0 = StateVector::zero(1).unwrap();
        let z1 = StateVector::basis(1, 1).unwrap();
        assert_eq!(fidelity_pure(&z0, &z0).unwrap(), 1.0);
        assert_eq!(fidelity_pure(&z0, &z1).unwrap(), 0.0);

        let diag = DensityMatrix2 {
            m: [[ONE, ZERO], [ZERO, ZERO]],
        };
        assert_eq!(fidelity_mixed(&z0, &diag).unwrap(), 1.0);
        let half = DensityMatrix2 {
            m: [[c(0.5, 0.0), ZERO], [ZERO, c(0.5, 0.0)]],
        };
        assert_eq!(fidelity_mixed(&z0, &half).unwrap(), 0.5);

        let r = FRAC_1_SQRT_2;
        let plus = state(&[(r, 0.0), (0.0, 0.0), (r, 0.0), (0.0, 0.0)]);
        let rho = plus.reduced_density(0).unwrap();
        assert!((fidelity_mixed(&z0, &rho).unwrap() - 0.5).abs() < 1e-15);

        assert!(fidelity_mixed(&StateVector::zero(2).unwrap(), &half).is_err());
        assert!(fidelity_pure(&z0, &StateVector::zero(2).unwrap()).is_err());
    }

    #[test]
    fn density_matrix_eigenvalues() {
        let half = DensityMatrix2 {
            m: [[c(0.5, 0.0), ZERO], [ZERO, c(0.5, 0.0)]],
        };
        assert!((half.min_eigenvalue() - 0.5).abs() < 1e-15);
        assert!((half.purity() - 0.5).abs() < 1e-15);
    }
}
