//! Markovian generator of the reduced spin dynamics.
//!
//! `C(t) = ∫₀ᵗ W(s) U(−s) ds` collects the noise correlations seen in the
//! interaction picture. Its antisymmetric part `C_A` shifts the Hamiltonian,
//! `L_D = C + Cᵀ` is the Kossakowski matrix of the dissipator.

use nalgebra::{Complex, Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::bloch::{pauli, Mat2, C64};
use crate::error::{Error, Result};
use crate::noise::{GeneralCovariance, NoiseModel};

/// Symmetry tolerance for `C_A` and `L_D`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues of `L_D` above `−ROOT_CLAMP` are treated as zero.
pub const ROOT_CLAMP: f64 = 1e-10;

const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_TAIL: f64 = 1e-12;
const QUAD_MAX_DEPTH: u32 = 40;

/// Interaction-picture rotation generated by `H₀ = (ω₀/2)σ₃`.
pub fn rotation_u(omega0: f64, t: f64) -> Matrix3<f64> {
    let (s, c) = (omega0 * t).sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `∫₀ᵗ e^{−λs} e^{iω₀s} ds`; `t = ∞` gives `1/(λ − iω₀)`.
fn damped_phase_integral(lambda: f64, omega0: f64, t: f64) -> Complex<f64> {
    let z = Complex::new(lambda, -omega0);
    if t.is_infinite() {
        return z.inv();
    }
    let num = Complex::new(1.0, 0.0) - (-z * t).exp();
    if z.norm() * t < 1e-8 {
        // (1 − e^{−zt})/z without cancellation
        return Complex::new(t, 0.0) * (Complex::new(1.0, 0.0) - z * (t / 2.0));
    }
    num / z
}

fn exponential_c(comp: [(f64, f64); 3], omega0: f64, t: f64) -> Matrix3<f64> {
    let [(w1, l1), (w2, l2), (w3, l3)] = comp;
    let i1 = damped_phase_integral(l1, omega0, t);
    let i2 = damped_phase_integral(l2, omega0, t);
    let e3 = damped_phase_integral(l3, 0.0, t).re;
    Matrix3::new(
        w1 * i1.re,
        w1 * i1.im,
        0.0,
        -w2 * i2.im,
        w2 * i2.re,
        0.0,
        0.0,
        0.0,
        w3 * e3,
    )
}

/// `C(t) = ∫₀ᵗ W(s) U(−s) ds`. Closed form for exponential models, adaptive
/// Simpson quadrature for general covariances.
pub fn finite_time_c(model: &NoiseModel, omega0: f64, t: f64) -> Result<Matrix3<f64>> {
    model.validate()?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::validation(format!("time must be >= 0 (got {t})")));
    }
    if let Some(comp) = model.exponential_components() {
        return Ok(exponential_c(comp, omega0, t));
    }
    match model {
        NoiseModel::GeneralStationary(cov) => {
            let scale = cov.envelope().amplitude / cov.envelope().rate;
            quadrature_c(cov, omega0, t, scale)
        }
        _ => Err(Error::UnsupportedVariant {
            variant: "white",
            hint: "white noise has no finite-time kernel, use markov_matrices",
        }),
    }
}

/// Truncation point past which the envelope tail integral is below `QUAD_TAIL`.
fn truncation_time(cov: &GeneralCovariance) -> f64 {
    let env = cov.envelope();
    let tail0 = env.amplitude / env.rate;
    if tail0 <= QUAD_TAIL {
        0.0
    } else {
        (tail0 / QUAD_TAIL).ln() / env.rate
    }
}

fn quadrature_c(cov: &GeneralCovariance, omega0: f64, t: f64, scale: f64) -> Result<Matrix3<f64>> {
    let f = |s: f64| cov.eval(s) * rotation_u(omega0, -s);
    let abs_tol = QUAD_REL_TOL * scale.max(f64::MIN_POSITIVE);
    // panels short enough that each sees at most a quarter turn
    let panel = if omega0 != 0.0 {
        (std::f64::consts::FRAC_PI_2 / omega0.abs()).min(1.0 / cov.envelope().rate)
    } else {
        1.0 / cov.envelope().rate
    };
    let n = ((t / panel).ceil() as usize).max(1);
    let h = t / n as f64;
    let mut total = Matrix3::zeros();
    let mut achieved = 0.0;
    for k in 0..n {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        let (val, err) = simpson_panel(&f, a, b, abs_tol / n as f64);
        total += val;
        achieved += err;
    }
    if achieved > abs_tol {
        return Err(Error::Quadrature {
            achieved,
            target: abs_tol,
        });
    }
    Ok(total)
}

fn simpson_panel<F>(f: &F, a: f64, b: f64, tol: f64) -> (Matrix3<f64>, f64)
where
    F: Fn(f64) -> Matrix3<f64>,
{
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, QUAD_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: Matrix3<f64>,
    fm: Matrix3<f64>,
    fb: Matrix3<f64>,
    whole: Matrix3<f64>,
    tol: f64,
    depth: u32,
) -> (Matrix3<f64>, f64)
where
    F: Fn(f64) -> Matrix3<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    let err = delta.amax() / 15.0;
    if err <= tol || depth == 0 {
        return (left + right + delta / 15.0, err);
    }
    let (l, el) = adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1);
    let (r, er) = adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
    (l + r, el + er)
}

/// Markov-limit matrices `C_A` (antisymmetric) and `L_D` (symmetric).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarkovMatrices {
    pub c_a: Matrix3<f64>,
    pub l_d: Matrix3<f64>,
    pub omega0: f64,
}

impl MarkovMatrices {
    pub fn new(c_a: Matrix3<f64>, l_d: Matrix3<f64>, omega0: f64) -> Result<Self> {
        let m = MarkovMatrices { c_a, l_d, omega0 };
        m.validate()?;
        Ok(m)
    }

    fn from_c(c: Matrix3<f64>, omega0: f64) -> Self {
        MarkovMatrices {
            c_a: (c - c.transpose()) * 0.5,
            l_d: c + c.transpose(),
            omega0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let anti = (self.c_a + self.c_a.transpose()).amax();
        if anti > SYMMETRY_TOL {
            return Err(Error::validation(format!("C_A is not antisymmetric (defect {anti:e})")));
        }
        let asym = (self.l_d - self.l_d.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::validation(format!("L_D is not symmetric (defect {asym:e})")));
        }
        if !(self.omega0.is_finite() && self.c_a.iter().chain(self.l_d.iter()).all(|x| x.is_finite())) {
            return Err(Error::validation("Markov matrices have non-finite entries"));
        }
        Ok(())
    }

    /// Frequency shift `Δω = 4·C_A(1,2)` of the Larmor line.
    pub fn lamb_shift(&self) -> f64 {
        4.0 * self.c_a[(0, 1)]
    }

    /// `H_D = Σ C^A_ij ε_ijk σ_k` as a vector.
    pub fn hamiltonian_shift(&self) -> Vector3<f64> {
        let a = &self.c_a;
        Vector3::new(2.0 * a[(1, 2)], 2.0 * a[(2, 0)], 2.0 * a[(0, 1)])
    }
}

/// Markov-limit matrices of a noise model for Larmor frequency `omega0`.
pub fn markov_matrices(model: &NoiseModel, omega0: f64) -> Result<MarkovMatrices> {
    model.validate()?;
    if !omega0.is_finite() {
        return Err(Error::validation("omega0 must be finite"));
    }
    if let Some(comp) = model.exponential_components() {
        return Ok(MarkovMatrices::from_c(exponential_c(comp, omega0, f64::INFINITY), omega0));
    }
    match model {
        NoiseModel::WhiteNoise { strength } => Ok(MarkovMatrices {
            c_a: Matrix3::zeros(),
            l_d: *strength,
            omega0,
        }),
        NoiseModel::GeneralStationary(cov) => {
            let scale = cov.envelope().amplitude / cov.envelope().rate;
            let c = quadrature_c(cov, omega0, truncation_time(cov), scale)?;
            Ok(MarkovMatrices::from_c(c, omega0))
        }
        _ => unreachable!("exponential models handled above"),
    }
}

/// Parameters of the Bloch generator: Hamiltonian vector `h` and the six
/// dissipation coefficients `a, b, c, α, β, γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneratorParams {
    pub h: Vector3<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Bare Larmor frequency.
    pub omega0: f64,
    /// Dissipation-induced shift of the Larmor frequency (reported even when
    /// not folded into `h`).
    pub lamb_shift: f64,
}

impl GeneratorParams {
    /// Unitary precession at `omega0`.
    pub fn closed(omega0: f64) -> Self {
        GeneratorParams::from_dissipation(omega0, [0.0; 6])
    }

    /// Precession about z at `omega0` with dissipation `[a, b, c, α, β, γ]`.
    pub fn from_dissipation(omega0: f64, d: [f64; 6]) -> Self {
        let [a, b, c, alpha, beta, gamma] = d;
        GeneratorParams {
            h: Vector3::new(0.0, 0.0, omega0 / 2.0),
            a,
            b,
            c,
            alpha,
            beta,
            gamma,
            omega0,
            lamb_shift: 0.0,
        }
    }

    /// Phase-covariant damping: `α = a`, `b = c = β = 0`.
    pub fn diagonal(omega0: f64, a: f64, gamma: f64) -> Self {
        GeneratorParams::from_dissipation(omega0, [a, 0.0, 0.0, a, 0.0, gamma])
    }

    pub fn dissipation(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.alpha, self.beta, self.gamma]
    }

    pub fn validate(&self) -> Result<()> {
        if self.h.iter().chain(self.dissipation().iter()).all(|x| x.is_finite())
            && self.omega0.is_finite()
            && self.lamb_shift.is_finite()
        {
            Ok(())
        } else {
            Err(Error::validation("generator parameters must be finite"))
        }
    }

    /// `M = [[a,b,c],[b,α,β],[c,β,γ]]`; the dissipator acts on the Bloch
    /// vector as `−2M`.
    pub fn dissipation_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.a, self.b, self.c, self.b, self.alpha, self.beta, self.c, self.beta, self.gamma,
        )
    }

    /// Kossakowski matrix reconstructed from the dissipation parameters.
    pub fn l_d(&self) -> Matrix3<f64> {
        let m = self.dissipation_matrix();
        Matrix3::identity() * (m.trace() / 2.0) - m
    }

    /// Longitudinal relaxation time `1/(2γ)`.
    pub fn t1(&self) -> Option<f64> {
        (self.gamma > 0.0).then(|| 1.0 / (2.0 * self.gamma))
    }

    /// Transverse relaxation time `1/(2a)`.
    pub fn t2(&self) -> Option<f64> {
        (self.a > 0.0).then(|| 1.0 / (2.0 * self.a))
    }

    /// Effective precession frequency `2h³`.
    pub fn precession(&self) -> f64 {
        2.0 * self.h[2]
    }
}

/// Generator parameters from Markov matrices. With `include_lamb_shift`
/// the `C_A` contribution is added to `h`; otherwise `h = (0, 0, ω₀/2)`.
pub fn params_from_matrices(m: &MarkovMatrices, include_lamb_shift: bool) -> Result<GeneratorParams> {
    m.validate()?;
    let l = &m.l_d;
    let mut p = GeneratorParams::from_dissipation(
        m.omega0,
        [
            l[(1, 1)] + l[(2, 2)],
            -l[(0, 1)],
            -l[(0, 2)],
            l[(0, 0)] + l[(2, 2)],
            -l[(1, 2)],
            l[(0, 0)] + l[(1, 1)],
        ],
    );
    p.lamb_shift = m.lamb_shift();
    if include_lamb_shift {
        p.h += m.hamiltonian_shift();
    }
    Ok(p)
}

/// Hamiltonian part of the Bloch generator.
pub fn hamiltonian_matrix(h: &Vector3<f64>) -> Matrix4<f64> {
    let (h1, h2, h3) = (h[0], h[1], h[2]);
    Matrix4::new(
        0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, h3, -h2, //
        0.0, -h3, 0.0, h1, //
        0.0, h2, -h1, 0.0,
    ) * -2.0
}

/// Dissipative part of the Bloch generator.
pub fn dissipator_matrix(p: &GeneratorParams) -> Matrix4<f64> {
    let mut d = Matrix4::zeros();
    d.fixed_view_mut::<3, 3>(1, 1).copy_from(&(p.dissipation_matrix() * -2.0));
    d
}

/// `H + D` acting on `(ρ⁰, ρ¹, ρ², ρ³)`.
pub fn bloch_generator(p: &GeneratorParams) -> Matrix4<f64> {
    hamiltonian_matrix(&p.h) + dissipator_matrix(p)
}

/// Hermitian Lindblad operators `A_k = Σ_i a_ki σ_i` with `[a_ki]` the
/// symmetric square root of `L_D`.
pub fn lindblad_operators(m: &MarkovMatrices) -> Result<Vec<Mat2>> {
    m.validate()?;
    let eig = SymmetricEigen::new(m.l_d);
    let min = eig.eigenvalues.min();
    if min < -ROOT_CLAMP {
        return Err(Error::NoLindbladForm { min_eigenvalue: min });
    }
    let sqrt = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    let root = eig.eigenvectors * Matrix3::from_diagonal(&sqrt) * eig.eigenvectors.transpose();
    let root = (root + root.transpose()) * 0.5;
    Ok((0..3)
        .map(|k| {
            (0..3).fold(Mat2::zeros(), |acc, i| {
                acc + pauli(i + 1) * C64::new(root[(k, i)], 0.0)
            })
        })
        .collect())
}

/// Bloch matrix of `ρ ↦ Σ_k (A_k ρ A_k† − ½{A_k†A_k, ρ})`.
pub fn dissipator_from_operators(ops: &[Mat2]) -> Matrix4<f64> {
    let mut out = Matrix4::zeros();
    for nu in 0..4 {
        let rho = pauli(nu);
        let mut lr = Mat2::zeros();
        for a in ops {
            let ad = a.adjoint();
            let ada = ad * a;
            lr += a * rho * ad - (ada * rho + rho * ada) * C64::new(0.5, 0.0);
        }
        for mu in 0..4 {
            // coordinates in ρ = Σ ρ^μ σ_μ
            out[(mu, nu)] = ((pauli(mu) * lr).trace() / 2.0).re;
        }
    }
    out
}

/// Markov matrices for the generator parameters themselves, with `C_A`
/// carrying the component of `h` beyond `(0, 0, ω₀/2)`.
pub fn matrices_from_params(p: &GeneratorParams) -> MarkovMatrices {
    let shift = (p.h - Vector3::new(0.0, 0.0, p.omega0 / 2.0)) / 2.0;
    let c_a = Matrix3::new(
        0.0, shift[2], -shift[1], //
        -shift[2], 0.0, shift[0], //
        shift[1], -shift[0], 0.0,
    );
    MarkovMatrices {
        c_a,
        l_d: p.l_d(),
        omega0: p.omega0,
    }
}
