//! Gaussian stochastic field models and their samplers.
//!
//! The field `V(t)` is zero-mean with stationary covariance
//! `W_ij(t − s) = ⟨V_i(t) V_j(s)⟩`, `W_ij(t) = W_ji(−t)`. Exponential models
//! are sampled exactly as Ornstein–Uhlenbeck processes; white noise uses an
//! OU surrogate whose integrated covariance matches the white-noise strength.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Correlation time of the white-noise surrogate, in grid steps.
pub const WHITE_SURROGATE_STEPS: f64 = 5.0;

const SYMMETRY_TOL: f64 = 1e-12;

pub type CovarianceFn = Arc<dyn Fn(f64) -> Matrix3<f64> + Send + Sync>;

/// Declared bound `‖W(t)‖ ≤ amplitude · e^{−rate·t}` for `t ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope {
    pub amplitude: f64,
    pub rate: f64,
}

/// A user-supplied stationary covariance, evaluated for `t ≥ 0`.
/// Negative lags follow from `W(−t) = W(t)ᵀ`.
#[derive(Clone)]
pub struct GeneralCovariance {
    func: CovarianceFn,
    envelope: Envelope,
}

impl GeneralCovariance {
    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    pub fn eval(&self, t: f64) -> Matrix3<f64> {
        if t >= 0.0 {
            (self.func)(t)
        } else {
            (self.func)(-t).transpose()
        }
    }
}

impl fmt::Debug for GeneralCovariance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralCovariance")
            .field("envelope", &self.envelope)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum NoiseModel {
    /// `W_ij(t − s) = W_ij δ(t − s)`.
    WhiteNoise { strength: Matrix3<f64> },
    /// `⟨V1V1⟩ = ⟨V2V2⟩ = g²B1² e^{−λ|t|}`, `⟨V3V3⟩ = g²B3² e^{−μ|t|}`.
    DiagonalExp {
        g: f64,
        b1: f64,
        b3: f64,
        lambda: f64,
        mu: f64,
    },
    /// Field along x only, `⟨V1V1⟩ = g²B² e^{−λ|t|}`.
    SingleAxisExp { g: f64, b: f64, lambda: f64 },
    GeneralStationary(GeneralCovariance),
}

impl NoiseModel {
    pub fn white(strength: Matrix3<f64>) -> Result<Self> {
        let m = NoiseModel::WhiteNoise { strength };
        m.validate()?;
        Ok(m)
    }

    /// White noise with zero strength: no field at all.
    pub fn none() -> Self {
        NoiseModel::WhiteNoise {
            strength: Matrix3::zeros(),
        }
    }

    pub fn diagonal_exp(g: f64, b1: f64, b3: f64, lambda: f64, mu: f64) -> Result<Self> {
        let m = NoiseModel::DiagonalExp { g, b1, b3, lambda, mu };
        m.validate()?;
        Ok(m)
    }

    pub fn single_axis(g: f64, b: f64, lambda: f64) -> Result<Self> {
        let m = NoiseModel::SingleAxisExp { g, b, lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn general<F>(func: F, envelope: Envelope) -> Result<Self>
    where
        F: Fn(f64) -> Matrix3<f64> + Send + Sync + 'static,
    {
        let m = NoiseModel::GeneralStationary(GeneralCovariance {
            func: Arc::new(func),
            envelope,
        });
        m.validate()?;
        Ok(m)
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::WhiteNoise { strength } if strength.iter().all(|x| *x == 0.0) => "none",
            NoiseModel::WhiteNoise { .. } => "white",
            NoiseModel::DiagonalExp { .. } => "diagonal_exp",
            NoiseModel::SingleAxisExp { .. } => "single_axis",
            NoiseModel::GeneralStationary(_) => "general_stationary",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::WhiteNoise { strength } => {
                if !strength.iter().all(|x| x.is_finite()) {
                    return Err(Error::validation("white-noise strength has non-finite entries"));
                }
                let asym = (strength - strength.transpose()).amax();
                if asym > SYMMETRY_TOL {
                    return Err(Error::validation(format!(
                        "white-noise strength is not symmetric (defect {asym:e})"
                    )));
                }
                let min = SymmetricEigen::new(*strength).eigenvalues.min();
                if min < -SYMMETRY_TOL {
                    return Err(Error::validation(format!(
                        "white-noise strength has negative eigenvalue {min:e}"
                    )));
                }
            }
            NoiseModel::DiagonalExp { g, b1, b3, lambda, mu } => {
                check_finite(&[*g, *b1, *b3])?;
                check_rate("lambda", *lambda)?;
                check_rate("mu", *mu)?;
            }
            NoiseModel::SingleAxisExp { g, b, lambda } => {
                check_finite(&[*g, *b])?;
                check_rate("lambda", *lambda)?;
            }
            NoiseModel::GeneralStationary(cov) => {
                let Envelope { amplitude, rate } = cov.envelope;
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return Err(Error::validation("envelope amplitude must be finite and >= 0"));
                }
                check_rate("envelope rate", rate)?;
            }
        }
        Ok(())
    }

    /// `(variance, decay rate)` of each field component for the exponential
    /// models, which have diagonal covariance.
    pub(crate) fn exponential_components(&self) -> Option<[(f64, f64); 3]> {
        match *self {
            NoiseModel::DiagonalExp { g, b1, b3, lambda, mu } => {
                let w1 = g * g * b1 * b1;
                Some([(w1, lambda), (w1, lambda), (g * g * b3 * b3, mu)])
            }
            NoiseModel::SingleAxisExp { g, b, lambda } => {
                Some([(g * g * b * b, lambda), (0.0, lambda), (0.0, lambda)])
            }
            _ => None,
        }
    }
}

fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation("noise parameters must be finite"))
    }
}

fn check_rate(name: &str, r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be > 0 (got {r})")))
    }
}

/// Covariance matrix `W(t)` of a non-white model.
pub fn covariance_at(model: &NoiseModel, t: f64) -> Result<Matrix3<f64>> {
    if let Some(comp) = model.exponential_components() {
        return Ok(Matrix3::from_diagonal(&Vector3::from_fn(|i, _| {
            comp[i].0 * (-comp[i].1 * t.abs()).exp()
        })));
    }
    match model {
        NoiseModel::GeneralStationary(cov) => Ok(cov.eval(t)),
        _ => Err(Error::UnsupportedVariant {
            variant: "white",
            hint: "its covariance is a delta distribution, use white_strength",
        }),
    }
}

/// Strength matrix `W` of a white-noise model.
pub fn white_strength(model: &NoiseModel) -> Result<Matrix3<f64>> {
    match model {
        NoiseModel::WhiteNoise { strength } => Ok(*strength),
        other => Err(Error::UnsupportedVariant {
            variant: other.name(),
            hint: "only white noise has a strength matrix, use covariance_at",
        }),
    }
}

/// Uniform time grid `start + k·step`, `k = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::validation(format!("grid step must be > 0 (got {step})")));
        }
        if len == 0 || !start.is_finite() {
            return Err(Error::validation("grid must have at least one finite point"));
        }
        Ok(TimeGrid { start, step, len })
    }

    /// `steps + 1` points covering `[0, horizon]`.
    pub fn spanning(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::validation("grid needs at least one step"));
        }
        TimeGrid::new(0.0, horizon / steps as f64, steps + 1)
    }

    /// Accepts only uniformly spaced, strictly increasing points.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::validation("grid needs at least two points"));
        }
        let step = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
        let tol = 1e-9 * step.abs().max(f64::MIN_POSITIVE);
        for (k, w) in points.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > tol {
                return Err(Error::validation(format!(
                    "grid is not uniform at index {k} (spacing {} vs {step})",
                    w[1] - w[0]
                )));
            }
        }
        TimeGrid::new(points[0], step, points.len())
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.time(k)).collect()
    }
}

/// One sampled realization of `V(t)` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTrajectory {
    pub grid: TimeGrid,
    pub values: Vec<Vector3<f64>>,
}

impl FieldTrajectory {
    pub fn zero(grid: TimeGrid) -> Self {
        FieldTrajectory {
            grid,
            values: vec![Vector3::zeros(); grid.len()],
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` under a master seed. Depends only on the pair,
/// never on scheduling.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

#[derive(Clone, Debug)]
enum SamplerKind {
    /// Independent OU processes along the columns of `basis`.
    Ou {
        basis: Matrix3<f64>,
        variance: [f64; 3],
        decay: [f64; 3],
    },
    /// Exact gaussian on the grid via the Cholesky factor of the full covariance.
    Cholesky { factor: DMatrix<f64> },
}

/// Reusable sampler for one model on one grid.
#[derive(Clone, Debug)]
pub struct FieldSampler {
    grid: TimeGrid,
    kind: SamplerKind,
}

impl FieldSampler {
    pub fn new(model: &NoiseModel, grid: TimeGrid) -> Result<Self> {
        model.validate()?;
        let h = grid.step();
        let kind = if let Some(comp) = model.exponential_components() {
            SamplerKind::Ou {
                basis: Matrix3::identity(),
                variance: comp.map(|c| c.0),
                decay: comp.map(|c| (-c.1 * h).exp()),
            }
        } else {
            match model {
                NoiseModel::WhiteNoise { strength } => {
                    let tau = WHITE_SURROGATE_STEPS * h;
                    let eig = SymmetricEigen::new(*strength);
                    let a = (-h / tau).exp();
                    SamplerKind::Ou {
                        basis: eig.eigenvectors,
                        variance: [0, 1, 2].map(|k| eig.eigenvalues[k].max(0.0) / (2.0 * tau)),
                        decay: [a; 3],
                    }
                }
                NoiseModel::GeneralStationary(cov) => Self::cholesky(cov, grid)?,
                _ => unreachable!("exponential models handled above"),
            }
        };
        Ok(FieldSampler { grid, kind })
    }

    fn cholesky(cov: &GeneralCovariance, grid: TimeGrid) -> Result<SamplerKind> {
        let n = grid.len();
        let full = DMatrix::from_fn(3 * n, 3 * n, |r, c| {
            let (k, i) = (r / 3, r % 3);
            let (l, j) = (c / 3, c % 3);
            cov.eval(grid.time(k) - grid.time(l))[(i, j)]
        });
        let scale = full.diagonal().amax().max(f64::MIN_POSITIVE);
        for jitter in [0.0, 1e-14, 1e-12, 1e-10] {
            let m = &full + DMatrix::identity(3 * n, 3 * n) * (jitter * scale);
            if let Some(ch) = m.cholesky() {
                return Ok(SamplerKind::Cholesky { factor: ch.l() });
            }
        }
        Err(Error::validation(
            "general covariance is not positive definite on the sampling grid",
        ))
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// Deterministic in `seed`.
    pub fn sample(&self, seed: u64) -> FieldTrajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.grid.len();
        let values = match &self.kind {
            SamplerKind::Ou { basis, variance, decay } => {
                let sd = variance.map(f64::sqrt);
                let innov = [0, 1, 2].map(|k| (variance[k] * (1.0 - decay[k] * decay[k])).sqrt());
                let mut x = Vector3::from_fn(|k, _| sd[k] * normal(&mut rng));
                let mut out = Vec::with_capacity(n);
                out.push(basis * x);
                for _ in 1..n {
                    for k in 0..3 {
                        x[k] = decay[k] * x[k] + innov[k] * normal(&mut rng);
                    }
                    out.push(basis * x);
                }
                out
            }
            SamplerKind::Cholesky { factor } => {
                let z = DVector::from_fn(3 * n, |_, _| normal(&mut rng));
                let v = factor * z;
                (0..n).map(|k| Vector3::new(v[3 * k], v[3 * k + 1], v[3 * k + 2])).collect()
            }
        };
        FieldTrajectory {
            grid: self.grid,
            values,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// One trajectory of `model` on `grid`.
pub fn sample_trajectory(model: &NoiseModel, grid: TimeGrid, seed: u64) -> Result<FieldTrajectory> {
    Ok(FieldSampler::new(model, grid)?.sample(seed))
}
