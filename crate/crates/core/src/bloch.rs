//! Pauli-basis algebra for a single spin.
//!
//! A 2×2 density matrix is written as `ρ = Σ_μ ρ^μ σ_μ` with `σ_0 = 1`, so a
//! unit-trace state has `ρ^0 = 1/2` and a physical state satisfies
//! `(ρ^1)² + (ρ^2)² + (ρ^3)² ≤ 1/4`. Vectors outside that ball are still
//! representable: they describe what a non-positive evolution produces.

use nalgebra::{Complex, Matrix2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Mat2 = Matrix2<C64>;

/// Absolute tolerance for hermiticity and trace checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `σ_0 … σ_3`; `k` outside `0..4` panics.
pub fn pauli(k: usize) -> Mat2 {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match k {
        0 => Mat2::new(o, z, z, o),
        1 => Mat2::new(z, o, o, z),
        2 => Mat2::new(z, -i, i, z),
        3 => Mat2::new(o, z, z, -o),
        _ => panic!("pauli index {k} out of range"),
    }
}

pub(crate) fn hermiticity_defect(m: &Mat2) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Real Pauli coordinates `(ρ^0, ρ^1, ρ^2, ρ^3)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector(pub [f64; 4]);

impl BlochVector {
    pub const fn new(r0: f64, r1: f64, r2: f64, r3: f64) -> Self {
        BlochVector([r0, r1, r2, r3])
    }

    pub const fn maximally_mixed() -> Self {
        BlochVector([0.5, 0.0, 0.0, 0.0])
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        BlochVector([v[0], v[1], v[2], v[3]])
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::from(self.0)
    }

    pub fn components(&self) -> [f64; 4] {
        self.0
    }

    /// `(ρ^1, ρ^2, ρ^3)`.
    pub fn spatial(&self) -> Vector3<f64> {
        Vector3::new(self.0[1], self.0[2], self.0[3])
    }

    /// Norm of the `(ρ^1, ρ^2)` part.
    pub fn transverse_norm(&self) -> f64 {
        self.0[1].hypot(self.0[2])
    }

    /// `Det ρ = (ρ^0)² − |ρ⃗|²`; negative means one eigenvalue is below zero.
    pub fn determinant(&self) -> f64 {
        self.0[0] * self.0[0] - self.spatial().norm_squared()
    }

    pub fn max_abs_diff(&self, other: &BlochVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A hermitian 2×2 spin matrix `[[ρ1, ρ3], [ρ4, ρ2]]`.
///
/// Construction checks hermiticity only. Trace and positivity are reported,
/// not enforced, because evolved states are allowed to leave the physical set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinDensity(Mat2);

impl SpinDensity {
    pub fn new(m: Mat2) -> Result<Self> {
        let defect = hermiticity_defect(&m);
        if defect > HERMITIAN_TOL {
            return Err(Error::validation(format!(
                "spin matrix is not hermitian (defect {defect:e})"
            )));
        }
        Ok(SpinDensity(m))
    }

    pub fn maximally_mixed() -> Self {
        from_bloch(BlochVector::maximally_mixed())
    }

    pub fn spin_up() -> Self {
        from_bloch(BlochVector::new(0.5, 0.0, 0.0, 0.5))
    }

    pub fn spin_down() -> Self {
        from_bloch(BlochVector::new(0.5, 0.0, 0.0, -0.5))
    }

    /// Pure state polarized along the unit vector `n`.
    pub fn polarized(n: &Vector3<f64>) -> Result<Self> {
        let norm = n.norm();
        if (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::validation(format!("direction is not unit (|n| = {norm})")));
        }
        Ok(from_bloch(BlochVector::new(0.5, n[0] / 2.0, n[1] / 2.0, n[2] / 2.0)))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        (self.0[(0, 0)] + self.0[(1, 1)]).re
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_of_hermitian(&self.0)
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let v = self.bloch();
        let r = v.spatial().norm();
        [v.0[0] + r, v.0[0] - r]
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.eigenvalues()[1] >= -tol && (self.trace() - 1.0).abs() <= tol.max(HERMITIAN_TOL)
    }
}

fn bloch_of_hermitian(m: &Mat2) -> BlochVector {
    let k = pauli_coords(m);
    BlochVector::new(k[0].re, k[1].re, k[2].re, k[3].re)
}

/// Complex Pauli coordinates of an arbitrary 2×2 matrix, `X = Σ_μ X^μ σ_μ`.
pub fn pauli_coords(m: &Mat2) -> [C64; 4] {
    let (r1, r3, r4, r2) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let two_i = c(0.0, 2.0);
    [(r1 + r2) / 2.0, (r3 + r4) / 2.0, (r4 - r3) / two_i, (r1 - r2) / 2.0]
}

/// Inverse of [`pauli_coords`].
pub fn from_pauli_coords(k: &[C64; 4]) -> Mat2 {
    let i = c(0.0, 1.0);
    Mat2::new(k[0] + k[3], k[1] - i * k[2], k[1] + i * k[2], k[0] - k[3])
}

/// Bloch coordinates of a hermitian matrix.
pub fn to_bloch(m: &Mat2) -> Result<BlochVector> {
    Ok(SpinDensity::new(*m)?.bloch())
}

/// Matrix with the given Bloch coordinates. Any real 4-vector is accepted.
pub fn from_bloch(v: BlochVector) -> SpinDensity {
    let k = v.0.map(|x| c(x, 0.0));
    SpinDensity(from_pauli_coords(&k))
}

/// `Tr(Xρ) = 2 Σ_ν X^ν ρ^ν` for a hermitian observable `X`.
pub fn pauli_expectation(x: &Mat2, rho: &SpinDensity) -> Result<f64> {
    let xv = to_bloch(x)?;
    let rv = rho.bloch();
    Ok(2.0 * (0..4).map(|k| xv.0[k] * rv.0[k]).sum::<f64>())
}

/// `B(n) = Q_n − Q_{−n} = n·σ`.
pub fn spin_observable(n: &Vector3<f64>) -> Mat2 {
    pauli(1) * c(n[0], 0.0) + pauli(2) * c(n[1], 0.0) + pauli(3) * c(n[2], 0.0)
}

/// `Q_n = (1 + n·σ)/2`, the projector on spin up along `n`.
pub fn spin_projector(n: &Vector3<f64>) -> Mat2 {
    (pauli(0) + spin_observable(n)) * c(0.5, 0.0)
}

fn ket_bra(a: usize, b: usize) -> Mat2 {
    let mut m = Mat2::zeros();
    m[(a, b)] = c(1.0, 0.0);
    m
}

fn projector_on(v: [C64; 2]) -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = [v[0] * s, v[1] * s];
    Mat2::new(v[0] * v[0].conj(), v[0] * v[1].conj(), v[1] * v[0].conj(), v[1] * v[1].conj())
}

/// The fixed path and spin operators of the interferometer.
///
/// Path basis is `(ψ_u, ψ_d)`, spin basis is `(↑_z, ↓_z)`.
#[derive(Clone, Debug)]
pub struct ProjectorFamily {
    /// `P1 = |u⟩⟨u|`, `P2 = |d⟩⟨d|`, `P3 = |u⟩⟨d|`, `P4 = |d⟩⟨u|`.
    pub path: [Mat2; 4],
    /// `Q1 = |↑⟩⟨↑|`, `Q2 = |↓⟩⟨↓|`, `Q3 = |↑⟩⟨↓|`, `Q4 = |↓⟩⟨↑|`.
    pub spin: [Mat2; 4],
    pub q_plus_x: Mat2,
    pub q_minus_x: Mat2,
    pub q_plus_y: Mat2,
    pub q_minus_y: Mat2,
    /// Projectors on `(ψ_u ± ψ_d)/√2`.
    pub p_plus: Mat2,
    pub p_minus: Mat2,
    /// Projectors on `(ψ_u ± iψ_d)/√2`.
    pub p_plus_i: Mat2,
    pub p_minus_i: Mat2,
}

impl ProjectorFamily {
    pub fn standard() -> Self {
        let units = [ket_bra(0, 0), ket_bra(1, 1), ket_bra(0, 1), ket_bra(1, 0)];
        let (o, i) = (c(1.0, 0.0), c(0.0, 1.0));
        let plus = projector_on([o, o]);
        let minus = projector_on([o, -o]);
        let plus_i = projector_on([o, i]);
        let minus_i = projector_on([o, -i]);
        ProjectorFamily {
            path: units,
            spin: units,
            q_plus_x: plus,
            q_minus_x: minus,
            q_plus_y: plus_i,
            q_minus_y: minus_i,
            p_plus: plus,
            p_minus: minus,
            p_plus_i: plus_i,
            p_minus_i: minus_i,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &Mat2, b: &Mat2) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn bloch_of_reference_states() {
        let mixed = Mat2::identity() * c(0.5, 0.0);
        assert_eq!(to_bloch(&mixed).unwrap(), BlochVector::new(0.5, 0.0, 0.0, 0.0));
        let up = Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(to_bloch(&up).unwrap(), BlochVector::new(0.5, 0.0, 0.0, 0.5));
        let plus_x = Mat2::from_element(c(0.5, 0.0));
        assert_eq!(to_bloch(&plus_x).unwrap(), BlochVector::new(0.5, 0.5, 0.0, 0.0));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = Mat2::new(c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0));
        assert!(matches!(to_bloch(&m), Err(Error::Validation(_))));
    }

    #[test]
    fn from_bloch_reference_states() {
        assert!(max_diff(from_bloch(BlochVector::new(0.5, 0.0, 0.0, 0.0)).matrix(), &(Mat2::identity() * c(0.5, 0.0))) < 1e-15);
        let down = Mat2::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(max_diff(from_bloch(BlochVector::new(0.5, 0.0, 0.0, -0.5)).matrix(), &down) < 1e-15);

        let bad = from_bloch(BlochVector::new(0.5, 0.0, 0.0, 0.7));
        let ev = bad.eigenvalues();
        assert!((ev[0] - 1.2).abs() < 1e-15 && (ev[1] + 0.2).abs() < 1e-15);
        assert!(!bad.is_physical(1e-10));
    }

    #[test]
    fn y_component_sign() {
        // ρ^2 = (ρ4 − ρ3)/(2i): the +y eigenstate has ρ3 = −i/2.
        let plus_y = ProjectorFamily::standard().q_plus_y;
        assert!((plus_y[(0, 1)] - c(0.0, -0.5)).norm() < 1e-15);
        let v = to_bloch(&plus_y).unwrap();
        assert!(v.max_abs_diff(&BlochVector::new(0.5, 0.0, 0.5, 0.0)) < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let up = SpinDensity::spin_up();
        assert!((pauli_expectation(&pauli(3), &up).unwrap() - 1.0).abs() < 1e-15);
        let mixed = SpinDensity::maximally_mixed();
        assert!(pauli_expectation(&pauli(1), &mixed).unwrap().abs() < 1e-15);
        let b = spin_observable(&Vector3::new(0.0, 0.0, 1.0));
        let down = SpinDensity::spin_down();
        assert!((pauli_expectation(&b, &down).unwrap() + 1.0).abs() < 1e-15);
        assert!(pauli_expectation(&ket_bra(0, 1), &up).is_err());
    }

    #[test]
    fn projector_family_relations() {
        let f = ProjectorFamily::standard();
        let id = Mat2::identity();
        assert!(max_diff(&(f.path[0] + f.path[1]), &id) < 1e-15);
        assert!(max_diff(&(f.spin[0] + f.spin[1]), &id) < 1e-15);
        assert!(max_diff(&f.path[2], &f.path[3].adjoint()) < 1e-15);
        assert!(max_diff(&f.spin[2], &f.spin[3].adjoint()) < 1e-15);
        assert!(max_diff(&(f.q_plus_x + f.q_minus_x), &id) < 1e-15);
        assert!(max_diff(&(f.q_plus_y + f.q_minus_y), &id) < 1e-15);
        assert!(max_diff(&(f.p_plus_i + f.p_minus_i), &id) < 1e-15);

        // P3 and Q3 from the genuine projectors.
        let half = c(0.5, 0.0);
        let i = c(0.0, 1.0);
        let p3 = (f.p_plus - f.p_minus + (f.p_plus_i - f.p_minus_i) * i) * half;
        assert!(max_diff(&p3, &f.path[2]) < 1e-15);
        let q3 = (f.q_plus_x - f.q_minus_x + (f.q_plus_y - f.q_minus_y) * i) * half;
        assert!(max_diff(&q3, &f.spin[2]) < 1e-15);

        let n = Vector3::new(0.6, -0.0, 0.8);
        let q = spin_projector(&n);
        assert!(max_diff(&(q * q), &q) < 1e-15);
        assert!(((q[(0, 0)] + q[(1, 1)]).re - 1.0).abs() < 1e-15);
    }
}
