//! Monte Carlo reference for the Markovian master equation.
//!
//! Each noise realization drives a unitary precession
//! `∂_t Σ = −i[(ω₀/2)σ₃ + V(t)·σ, Σ]`; averaging over realizations gives the
//! reduced state without any Markov or weak-coupling approximation.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::bloch::{BlochVector, SpinDensity};
use crate::dynamics::propagator;
use crate::error::{Error, Result};
use crate::markov::GeneratorParams;
use crate::noise::{trajectory_seed, FieldSampler, FieldTrajectory, NoiseModel, TimeGrid};

/// Largest accepted `h·(ω₀ + 2 max|V|)`.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;
/// Default number of integration steps per Larmor period.
pub const STEPS_PER_PERIOD: f64 = 200.0;
/// Floor of the second-order truncation budget.
pub const BUDGET_FLOOR: f64 = 5e-3;

const CHUNK: usize = 64;

/// Bloch-form RK4 for `r' = 2 h(t) × r`, `h = V + (0, 0, ω₀/2)`, with the
/// field at half steps taken as the mean of the neighbouring samples.
pub fn integrate_trajectory(omega0: f64, field: &FieldTrajectory, rho0: &SpinDensity) -> Result<Vec<BlochVector>> {
    let n = field.grid.len();
    if field.values.len() != n {
        return Err(Error::validation(format!(
            "field has {} samples for a grid of {n} points",
            field.values.len()
        )));
    }
    let h = field.grid.step();
    let phase = h * (omega0.abs() + 2.0 * field.max_norm());
    if phase > MAX_PHASE_PER_STEP {
        return Err(Error::StepTooLarge {
            value: phase,
            limit: MAX_PHASE_PER_STEP,
        });
    }
    let lift = Vector3::new(0.0, 0.0, omega0 / 2.0);
    let rhs = |hv: &Vector3<f64>, r: &Vector3<f64>| hv.cross(r) * 2.0;
    let v0 = rho0.bloch();
    let mut r = v0.spatial();
    let mut out = Vec::with_capacity(n);
    out.push(v0);
    for k in 1..n {
        let h0 = field.values[k - 1] + lift;
        let h1 = field.values[k] + lift;
        let hm = (h0 + h1) * 0.5;
        let k1 = rhs(&h0, &r);
        let k2 = rhs(&hm, &(r + k1 * (h / 2.0)));
        let k3 = rhs(&hm, &(r + k2 * (h / 2.0)));
        let k4 = rhs(&h1, &(r + k3 * h));
        r += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        out.push(BlochVector::new(v0.0[0], r[0], r[1], r[2]));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub trajectories: usize,
    pub seed: u64,
    /// Integration step; defaults to `(2π/ω₀)/200`.
    pub step: Option<f64>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl OracleOptions {
    pub fn new(trajectories: usize, seed: u64) -> Self {
        OracleOptions {
            trajectories,
            seed,
            step: None,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub times: Vec<f64>,
    /// Ensemble-averaged Bloch vectors.
    pub mean: Vec<[f64; 4]>,
    /// Standard errors of the spatial components of `mean`.
    pub std_err: Vec<[f64; 3]>,
    /// Master-equation solution on the same grid.
    pub master: Vec<[f64; 4]>,
    pub max_deviation: f64,
    pub max_deviation_time: f64,
    pub max_std_err: f64,
    /// Allowance for the neglected higher orders of the weak-coupling expansion.
    pub truncation_budget: f64,
    pub within_budget: bool,
    /// Smallest eigenvalue of any averaged state.
    pub min_state_eigenvalue: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub step: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone)]
struct Moments {
    sum: Vec<[f64; 3]>,
    sumsq: Vec<[f64; 3]>,
}

impl Moments {
    fn zeros(n: usize) -> Self {
        Moments {
            sum: vec![[0.0; 3]; n],
            sumsq: vec![[0.0; 3]; n],
        }
    }

    fn add_path(&mut self, path: &[BlochVector]) {
        for (k, v) in path.iter().enumerate() {
            for c in 0..3 {
                let x = v.0[c + 1];
                self.sum[k][c] += x;
                self.sumsq[k][c] += x * x;
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        for k in 0..self.sum.len() {
            for c in 0..3 {
                self.sum[k][c] += other.sum[k][c];
                self.sumsq[k][c] += other.sumsq[k][c];
            }
        }
    }
}

fn weak_coupling_warnings(model: &NoiseModel, omega0: f64, p: &GeneratorParams) -> Vec<String> {
    let rate = p.dissipation().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut out = Vec::new();
    if rate >= omega0.abs() / 10.0 {
        out.push(format!("dissipation rate {rate:e} is not small against omega0 = {omega0}"));
    }
    let corr = match *model {
        NoiseModel::DiagonalExp { lambda, mu, .. } => Some(lambda.min(mu)),
        NoiseModel::SingleAxisExp { lambda, .. } => Some(lambda),
        NoiseModel::GeneralStationary(ref c) => Some(c.envelope().rate),
        NoiseModel::WhiteNoise { .. } => None,
    };
    if let Some(l) = corr {
        if rate >= l / 10.0 {
            out.push(format!("dissipation rate {rate:e} is not small against the correlation decay {l}"));
        }
    }
    out
}

/// Averages `trajectories` noise realizations and compares with the
/// semigroup generated by `p`. Identical options give identical reports for
/// any thread count.
pub fn mc_compare(
    model: &NoiseModel,
    omega0: f64,
    p: &GeneratorParams,
    rho0: &SpinDensity,
    horizon: f64,
    opts: &OracleOptions,
) -> Result<OracleReport> {
    if opts.trajectories == 0 {
        return Err(Error::validation("need at least one trajectory"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::validation(format!("horizon must be > 0 (got {horizon})")));
    }
    let target = match opts.step {
        Some(h) => h,
        None if omega0 != 0.0 => 2.0 * std::f64::consts::PI / omega0.abs() / STEPS_PER_PERIOD,
        None => return Err(Error::validation("an explicit step is required when omega0 = 0")),
    };
    let steps = (horizon / target).ceil().max(1.0) as usize;
    let grid = TimeGrid::spanning(horizon, steps)?;
    let sampler = FieldSampler::new(model, grid)?;
    let n = grid.len();

    let run = || -> Result<Moments> {
        let chunks = opts.trajectories.div_ceil(CHUNK);
        let partials: Vec<Result<Moments>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut m = Moments::zeros(n);
                for i in c * CHUNK..((c + 1) * CHUNK).min(opts.trajectories) {
                    let field = sampler.sample(trajectory_seed(opts.seed, i as u64));
                    m.add_path(&integrate_trajectory(omega0, &field, rho0)?);
                }
                Ok(m)
            })
            .collect();
        let mut total = Moments::zeros(n);
        for part in partials {
            total.merge(&part?);
        }
        Ok(total)
    };
    let moments = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::validation(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let nf = opts.trajectories as f64;
    let v0 = rho0.bloch();
    let times = grid.times();
    let mut mean = Vec::with_capacity(n);
    let mut std_err = Vec::with_capacity(n);
    let mut master = Vec::with_capacity(n);
    let (mut max_dev, mut max_dev_t, mut max_se) = (0.0f64, 0.0, 0.0f64);
    let mut min_eig = f64::INFINITY;
    for (k, &t) in times.iter().enumerate() {
        let m: [f64; 3] = std::array::from_fn(|c| moments.sum[k][c] / nf);
        let se: [f64; 3] = std::array::from_fn(|c| {
            if opts.trajectories < 2 {
                return 0.0;
            }
            let var = (moments.sumsq[k][c] / nf - m[c] * m[c]).max(0.0) * nf / (nf - 1.0);
            (var / nf).sqrt()
        });
        let me = propagator(p, t)?.apply(&v0);
        let dev = (0..3).map(|c| (m[c] - me.0[c + 1]).abs()).fold(0.0, f64::max);
        if dev > max_dev {
            max_dev = dev;
            max_dev_t = t;
        }
        max_se = se.iter().fold(max_se, |a, &b| a.max(b));
        min_eig = min_eig.min(v0.0[0] - Vector3::from(m).norm());
        mean.push([v0.0[0], m[0], m[1], m[2]]);
        std_err.push(se);
        master.push(me.0);
    }
    let rate = p.dissipation().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let truncation_budget = BUDGET_FLOOR.max((rate * horizon).powi(2));
    Ok(OracleReport {
        times,
        mean,
        std_err,
        master,
        max_deviation: max_dev,
        max_deviation_time: max_dev_t,
        max_std_err: max_se,
        truncation_budget,
        within_budget: max_dev <= (3.0 * max_se).max(truncation_budget),
        min_state_eigenvalue: min_eig,
        trajectories: opts.trajectories,
        seed: opts.seed,
        step: grid.step(),
        warnings: weak_coupling_warnings(model, omega0, p),
    })
}
