//! Semigroup evolution of a single spin and of path–spin entangled states.

use nalgebra::{SMatrix, Matrix4, SymmetricEigen};
use serde::Serialize;

use crate::bloch::{c, from_pauli_coords, pauli_coords, BlochVector, Mat2, ProjectorFamily, SpinDensity, C64, HERMITIAN_TOL};
use crate::error::{Error, Result};
use crate::markov::{bloch_generator, GeneratorParams};

pub type Mat4c = Matrix4<C64>;

/// Grid resolution used when scanning spectra if the caller has no preference.
pub const DEFAULT_SCAN_STEPS: usize = 400;

const SHAPE_TOL: f64 = 1e-12;
const DELTA_SERIES: f64 = 1e-6;

/// `G_t = exp(t(H + D))` acting on Bloch vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Propagator {
    pub matrix: Matrix4<f64>,
    pub t: f64,
}

impl Propagator {
    pub fn apply(&self, v: &BlochVector) -> BlochVector {
        BlochVector::from_vector(&(self.matrix * v.to_vector()))
    }

    /// Action on a 2×2 operator through its (complex) Pauli coordinates.
    pub fn apply_operator(&self, m: &Mat2) -> Mat2 {
        let k = pauli_coords(m);
        let mut out = [C64::new(0.0, 0.0); 4];
        for (mu, o) in out.iter_mut().enumerate() {
            for (nu, kv) in k.iter().enumerate() {
                *o += kv * self.matrix[(mu, nu)];
            }
        }
        from_pauli_coords(&out)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("time must be finite and >= 0 (got {t})")))
    }
}

pub fn propagator(p: &GeneratorParams, t: f64) -> Result<Propagator> {
    p.validate()?;
    check_time(t)?;
    let mut matrix = (bloch_generator(p) * t).exp();
    // trace preservation is structural; remove rounding in the first row
    matrix[(0, 0)] = 1.0;
    for j in 1..4 {
        matrix[(0, j)] = 0.0;
    }
    Ok(Propagator { matrix, t })
}

fn param_scale(p: &GeneratorParams) -> f64 {
    p.dissipation()
        .iter()
        .chain(p.h.iter())
        .fold(1.0f64, |m, x| m.max(x.abs()))
}

fn require_shape(p: &GeneratorParams, zeros: &[(f64, &str)], shape: &str) -> Result<()> {
    let tol = SHAPE_TOL * param_scale(p);
    for (v, name) in zeros {
        if v.abs() > tol {
            return Err(Error::validation(format!(
                "parameters do not have the {shape} shape: {name} = {v:e} must vanish"
            )));
        }
    }
    Ok(())
}

fn require_diagonal(p: &GeneratorParams) -> Result<()> {
    require_shape(
        p,
        &[
            (p.b, "b"),
            (p.c, "c"),
            (p.beta, "beta"),
            (p.a - p.alpha, "a - alpha"),
            (p.h[0], "h1"),
            (p.h[1], "h2"),
        ],
        "diagonal",
    )
}

/// Closed-form evolution for phase-covariant damping: transverse part
/// rotates at `ω = 2h³` and decays as `e^{−2at}`, ρ³ decays as `e^{−2γt}`.
pub fn analytic_diag(p: &GeneratorParams, v: &BlochVector, t: f64) -> Result<BlochVector> {
    require_diagonal(p)?;
    check_time(t)?;
    let [r0, r1, r2, r3] = v.components();
    let (s, co) = (p.precession() * t).sin_cos();
    let et = (-2.0 * p.a * t).exp();
    Ok(BlochVector::new(
        r0,
        et * (r1 * co - r2 * s),
        et * (r1 * s + r2 * co),
        (-2.0 * p.gamma * t).exp() * r3,
    ))
}

/// `cosh(δt)` and `sinh(δt)/δ` for `δ² = d2` of either sign.
pub(crate) fn hyperbolic_pair(d2: f64, t: f64) -> (f64, f64) {
    let d = d2.abs().sqrt();
    if d * t < DELTA_SERIES {
        let x = d2 * t * t;
        (1.0 + x / 2.0, t * (1.0 + x / 6.0))
    } else if d2 > 0.0 {
        ((d * t).cosh(), (d * t).sinh() / d)
    } else {
        ((d * t).cos(), (d * t).sin() / d)
    }
}

/// `δ² = γ² + 4b² − ω²` of the single-axis shape.
pub fn single_axis_delta_sq(p: &GeneratorParams) -> f64 {
    let w = p.precession();
    p.gamma * p.gamma + 4.0 * p.b * p.b - w * w
}

/// Closed-form evolution for a field along one transverse axis
/// (`a = c = β = 0`, `α = γ`).
pub fn analytic_single_axis(p: &GeneratorParams, v: &BlochVector, t: f64) -> Result<BlochVector> {
    require_shape(
        p,
        &[
            (p.a, "a"),
            (p.c, "c"),
            (p.beta, "beta"),
            (p.alpha - p.gamma, "alpha - gamma"),
            (p.h[0], "h1"),
            (p.h[1], "h2"),
        ],
        "single-axis",
    )?;
    check_time(t)?;
    let [r0, r1, r2, r3] = v.components();
    let (w, b, g) = (p.precession(), p.b, p.gamma);
    let (ch, sh) = hyperbolic_pair(single_axis_delta_sq(p), t);
    let e = (-g * t).exp();
    // e^{Kt} = e^{−γt}[cosh δt + sinh δt/δ · (K + γ)], K = [[0, −ω−2b], [ω−2b, −2γ]]
    let n1 = e * ((ch + sh * g) * r1 + sh * (-w - 2.0 * b) * r2);
    let n2 = e * (sh * (w - 2.0 * b) * r1 + (ch - sh * g) * r2);
    Ok(BlochVector::new(r0, n1, n2, (-2.0 * g * t).exp() * r3))
}

/// `a ⊗ b` with `a` on the path factor.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4c {
    Mat4c::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// Eigenvalues of a hermitian 4×4 matrix, descending.
pub fn hermitian_eigenvalues(m: &Mat4c) -> [f64; 4] {
    let emb = SMatrix::<f64, 8, 8>::from_fn(|r, col| {
        let z = m[(r % 4, col % 4)];
        match (r / 4, col / 4) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    let emb = (emb + emb.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(emb).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    // every eigenvalue appears twice in the real embedding
    [ev[0], ev[2], ev[4], ev[6]]
}

/// Joint path–spin state in the ordering `(u↑, u↓, d↑, d↓)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitState(Mat4c);

impl TwoQubitState {
    /// Validates hermiticity and unit trace; positivity is not enforced.
    pub fn new(m: Mat4c) -> Result<Self> {
        let defect = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > HERMITIAN_TOL {
            return Err(Error::validation(format!("two-qubit state is not hermitian (defect {defect:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::validation(format!("two-qubit state has trace {tr} != 1")));
        }
        Ok(TwoQubitState(m))
    }

    pub fn maximally_mixed() -> Self {
        TwoQubitState(Mat4c::identity() * c(0.25, 0.0))
    }

    /// `Σ ρ_ij P_i ⊗ Q_j`.
    pub fn from_coefficients(rho: &[[C64; 4]; 4]) -> Result<Self> {
        let f = ProjectorFamily::standard();
        let mut m = Mat4c::zeros();
        for (i, row) in rho.iter().enumerate() {
            for (j, &r) in row.iter().enumerate() {
                m += kron(&f.path[i], &f.spin[j]) * r;
            }
        }
        TwoQubitState::new(m)
    }

    /// Pure state `p ψ_u⊗↓ + q ψ_d⊗↑`.
    pub fn beam(p: C64, q: C64) -> Result<Self> {
        let norm = p.norm_sqr() + q.norm_sqr();
        if (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::validation(format!("|p|² + |q|² = {norm} != 1")));
        }
        let mut psi = [C64::new(0.0, 0.0); 4];
        psi[1] = p;
        psi[2] = q;
        Ok(TwoQubitState(Mat4c::from_fn(|r, col| psi[r] * psi[col].conj())))
    }

    /// The beam preparation with `p = −q = 1/√2`.
    pub fn singlet() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        TwoQubitState::beam(c(s, 0.0), c(-s, 0.0)).expect("normalized")
    }

    pub fn product(path: &Mat2, spin: &SpinDensity) -> Result<Self> {
        TwoQubitState::new(kron(path, spin.matrix()))
    }

    pub fn matrix(&self) -> &Mat4c {
        &self.0
    }

    /// `ρ_ij = Tr(ρ P_i† ⊗ Q_j†)`.
    pub fn coefficients(&self) -> [[C64; 4]; 4] {
        let f = ProjectorFamily::standard();
        let mut out = [[C64::new(0.0, 0.0); 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, r) in row.iter_mut().enumerate() {
                *r = (self.0 * kron(&f.path[i].adjoint(), &f.spin[j].adjoint())).trace();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        hermitian_eigenvalues(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[3]
    }

    /// The 2×2 spin block between path states `i` and `j`.
    pub fn spin_block(&self, i: usize, j: usize) -> Mat2 {
        self.0.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }

    pub fn max_abs_diff(&self, other: &TwoQubitState) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Apply `I ⊗ Γ_t` through a precomputed propagator.
pub fn evolve_with(g: &Propagator, rho: &TwoQubitState) -> TwoQubitState {
    let mut out = Mat4c::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let block = g.apply_operator(&rho.spin_block(i, j));
            out.fixed_view_mut::<2, 2>(2 * i, 2 * j).copy_from(&block);
        }
    }
    TwoQubitState(out)
}

/// `(I ⊗ Γ_t)[ρ]`: the spin factor evolves, the path factor is inert.
pub fn evolve_extended(p: &GeneratorParams, rho: &TwoQubitState, t: f64) -> Result<TwoQubitState> {
    Ok(evolve_with(&propagator(p, t)?, rho))
}

/// Closed-form spectrum of the evolved singlet for phase-covariant damping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingletSpectrum {
    /// Doubly degenerate `(1 − e^{−2γt})/4`.
    pub e_minus: f64,
    /// `(1 + e^{−2γt} + 2e^{−2at})/4`.
    pub lambda_plus: f64,
    /// `(1 + e^{−2γt} − 2e^{−2at})/4`, negative for small `t` when `a < γ/2`.
    pub lambda_minus: f64,
}

impl SingletSpectrum {
    pub fn sorted_desc(&self) -> [f64; 4] {
        let mut v = [self.e_minus, self.e_minus, self.lambda_plus, self.lambda_minus];
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

pub fn singlet_spectrum(p: &GeneratorParams, t: f64) -> Result<SingletSpectrum> {
    require_diagonal(p)?;
    check_time(t)?;
    let eg = (-2.0 * p.gamma * t).exp();
    let ea = (-2.0 * p.a * t).exp();
    Ok(SingletSpectrum {
        e_minus: (1.0 - eg) / 4.0,
        lambda_plus: (1.0 + eg + 2.0 * ea) / 4.0,
        lambda_minus: (1.0 + eg - 2.0 * ea) / 4.0,
    })
}

/// Minimum eigenvalue of `(I ⊗ Γ_t)[ρ]` over `steps + 1` uniform times in
/// `[0, horizon]`, and the first time it is attained.
pub fn spectrum_minimum(p: &GeneratorParams, rho: &TwoQubitState, horizon: f64, steps: usize) -> Result<(f64, f64)> {
    if steps < 2 {
        return Err(Error::validation("spectrum scan needs at least 2 steps"));
    }
    check_time(horizon)?;
    let dt = horizon / steps as f64;
    let step = propagator(p, dt)?;
    let mut g = propagator(p, 0.0)?;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=steps {
        if k > 0 {
            // recompute directly every so often to avoid drift of repeated products
            g = if k % 50 == 0 {
                propagator(p, k as f64 * dt)?
            } else {
                Propagator {
                    matrix: step.matrix * g.matrix,
                    t: k as f64 * dt,
                }
            };
        }
        let m = evolve_with(&g, rho).min_eigenvalue();
        if m < best.0 {
            best = (m, k as f64 * dt);
        }
    }
    Ok(best)
}
