//! Exit-gate checks. Runs without the libtest harness so each criterion
//! prints exactly one PASS/FAIL line regardless of output capture.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::process::ExitCode;

use nalgebra::{Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cplab::bloch::{BlochVector, SpinDensity, C64};
use cplab::dynamics::{
    analytic_diag, analytic_single_axis, evolve_extended, evolve_with, propagator, singlet_spectrum,
    single_axis_delta_sq, spectrum_minimum, TwoQubitState,
};
use cplab::interferometer::{chsh_value, observable_expectation, ChshConfig, Port};
use cplab::markov::{markov_matrices, params_from_matrices, GeneratorParams};
use cplab::noise::NoiseModel;
use cplab::oracle::{mc_compare, OracleOptions};
use cplab::perturbative::g_first_order;
use cplab::positivity::{check_cp, check_positive};
use cplab::tomography::{reconstruct, simulate_record, Mode};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

// Frozen reference values, computed from the closed forms at full precision.
const LAMBDA_MINUS_T1: f64 = -0.034_838_697_509_069_93;
const E_MINUS_T1: f64 = 0.082_419_988_491_090_17;
const F_ABS_T1: f64 = 0.452_418_709_017_979_76;
const CHSH_DIAG_2PI: f64 = 0.329_283_214_831_969_04;
const CHSH_DIAG_2PI_QUOTED: f64 = 0.32940;
const DELTA_SINGLE_AXIS: f64 = 0.574_456_264_653_802_8;

// Tolerances.
const TOL_LAMBDA: f64 = 1e-6;
const TOL_SPECTRUM: f64 = 1e-10;
const TOL_CP_FLOOR: f64 = -1e-10;
const TOL_BOUNDARY: f64 = 1e-12;
const TOL_MARGIN_BAND: f64 = 1e-9;
const TOL_PROPAGATOR: f64 = 1e-9;
const TOL_TSIRELSON: f64 = 1e-12;
const TOL_CHSH_DIAG: f64 = 1e-4;
const TOL_GROWTH: f64 = 0.05;
const TOL_OBSERVABLE: f64 = 1e-10;
const TOL_ROUND_TRIP: f64 = 1e-12;
const TOL_TOMO_VALUE: f64 = 1e-6;
const ORDER_RANGE: (f64, f64) = (3.0, 5.0);
const ORACLE_FLOOR: f64 = 5e-3;

const GRID_STEPS: usize = 400;
const GRID_HORIZON: f64 = 20.0;

fn grid() -> impl Iterator<Item = f64> {
    (0..=GRID_STEPS).map(|k| GRID_HORIZON * k as f64 / GRID_STEPS as f64)
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn negative_eigenvalue() -> Check {
    let p = GeneratorParams::diagonal(1.0, 0.05, 0.2);
    let singlet = TwoQubitState::singlet();
    let lm = singlet_spectrum(&p, 1.0).map_err(err)?.lambda_minus;
    let mut worst = 0.0f64;
    for t in grid() {
        let closed = singlet_spectrum(&p, t).map_err(err)?.sorted_desc();
        let numeric = evolve_extended(&p, &singlet, t).map_err(err)?.eigenvalues();
        for (a, b) in closed.iter().zip(numeric) {
            worst = worst.max((a - b).abs());
        }
    }
    let dev = (lm - LAMBDA_MINUS_T1).abs();
    ensure(
        dev <= TOL_LAMBDA && worst <= TOL_SPECTRUM,
        format!("lambda_-(1) = {lm:.9} (|dev| {dev:.1e}), closed vs numeric spectrum max {worst:.1e}"),
    )
}

fn cp_safety() -> Check {
    let singlet = TwoQubitState::singlet();
    let (min, at) = spectrum_minimum(&GeneratorParams::diagonal(1.0, 0.15, 0.2), &singlet, GRID_HORIZON, GRID_STEPS)
        .map_err(err)?;
    let gamma = 0.2;
    let edge = GeneratorParams::diagonal(1.0, gamma / 2.0, gamma);
    let mut worst = 0.0f64;
    for t in grid() {
        let expect = (1.0 - (-gamma * t).exp()).powi(2) / 4.0;
        let closed = singlet_spectrum(&edge, t).map_err(err)?.lambda_minus;
        let numeric = evolve_extended(&edge, &singlet, t).map_err(err)?.min_eigenvalue();
        worst = worst.max((closed - expect).abs()).max((numeric - expect).abs());
    }
    ensure(
        min >= TOL_CP_FLOOR && worst <= TOL_BOUNDARY,
        format!("a=0.15 min eigenvalue {min:.3e} at t={at:.2}; a=gamma/2 boundary max error {worst:.1e}"),
    )
}

fn cp_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut disagree, mut banded, mut not_positive, mut cp_count) = (0, 0, 0, 0);
    for _ in 0..10_000 {
        let d = [
            rng.random_range(0.0..1.0),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(0.0..1.0),
            rng.random_range(-0.5..0.5),
            rng.random_range(0.0..1.0),
        ];
        let p = GeneratorParams::from_dissipation(1.0, d);
        let min_eig = p.l_d().symmetric_eigenvalues().min();
        let (cp, _) = check_cp(&p);
        let (pos, _) = check_positive(&p);
        cp_count += cp as usize;
        if cp && !pos {
            not_positive += 1;
        }
        if min_eig.abs() <= TOL_MARGIN_BAND {
            banded += 1;
        } else if cp != (min_eig > 0.0) {
            disagree += 1;
        }
    }
    ensure(
        disagree == 0 && not_positive == 0,
        format!("10000 draws, {cp_count} cp, {disagree} disagreements, {banded} in band, {not_positive} cp-but-not-positive"),
    )
}

fn propagator_closed_forms() -> Check {
    let v = BlochVector::new(0.5, 0.3, -0.2, 0.35);
    let times: Vec<f64> = (0..100).map(|k| 10.0 * k as f64 / 99.0).collect();
    let diag_cases = [
        GeneratorParams::diagonal(1.0, 0.05, 0.2),
        GeneratorParams::diagonal(2.5, 0.3, 0.01),
        GeneratorParams::diagonal(0.0, 0.1, 0.1),
    ];
    // real, degenerate (γ² + 4b² = ω²) and imaginary δ
    let degenerate_omega = (0.1f64 * 0.1 + 4.0 * 0.3 * 0.3).sqrt();
    let axis_cases = [
        GeneratorParams::from_dissipation(0.2, [0.0, 0.3, 0.0, 0.1, 0.0, 0.1]),
        GeneratorParams::from_dissipation(degenerate_omega, [0.0, 0.3, 0.0, 0.1, 0.0, 0.1]),
        GeneratorParams::from_dissipation(2.0, [0.0, 0.3, 0.0, 0.1, 0.0, 0.1]),
    ];
    let mut worst = 0.0f64;
    for &t in &times {
        for p in &diag_cases {
            let exact = propagator(p, t).map_err(err)?.apply(&v);
            worst = worst.max(exact.max_abs_diff(&analytic_diag(p, &v, t).map_err(err)?));
        }
        for p in &axis_cases {
            let exact = propagator(p, t).map_err(err)?.apply(&v);
            worst = worst.max(exact.max_abs_diff(&analytic_single_axis(p, &v, t).map_err(err)?));
        }
    }
    let deltas: Vec<String> = axis_cases.iter().map(|p| format!("{:.2e}", single_axis_delta_sq(p))).collect();
    ensure(
        worst <= TOL_PROPAGATOR,
        format!("sup-norm {worst:.1e} over 100 times, delta^2 in {{{}}}", deltas.join(", ")),
    )
}

fn chsh_baseline() -> Check {
    let cfg = ChshConfig::new(
        (0.0, 0.0),
        (PI / 4.0, 0.0),
        Vector3::new(-FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2),
        Vector3::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2),
    )
    .map_err(err)?;
    let free = chsh_value(&GeneratorParams::closed(1.0), &cfg, 0.0).map_err(err)?;
    let damped = chsh_value(&GeneratorParams::diagonal(1.0, 0.15, 0.2), &cfg, 2.0 * PI).map_err(err)?;
    let formula = SQRT_2 * ((-0.8 * PI).exp() + (-0.6 * PI).exp());
    let tsirelson_dev = (free - 2.0 * SQRT_2).abs();
    let dev = (damped - formula).abs();
    // 0.32940 is a five-digit figure that misses the closed form by 1.2e-4; report the gap
    let quoted_gap = (damped - CHSH_DIAG_2PI_QUOTED).abs();
    ensure(
        tsirelson_dev <= TOL_TSIRELSON && dev <= TOL_CHSH_DIAG && (formula - CHSH_DIAG_2PI).abs() < 1e-15,
        format!(
            "t=0 {free:.15} (|dev| {tsirelson_dev:.1e}); t=2pi {damped:.8} vs formula {formula:.8} (|dev| {dev:.1e}), \
             quoted 0.32940 off by {quoted_gap:.2e}"
        ),
    )
}

fn divergence() -> Check {
    let p = GeneratorParams::from_dissipation(0.2, [0.0, 0.3, 0.0, 0.1, 0.0, 0.1]);
    let delta = single_axis_delta_sq(&p).sqrt();
    let v = BlochVector::new(0.5, 0.4, 0.0, 0.3);
    let norm = |t: f64| propagator(&p, t).map(|g| g.apply(&v).transverse_norm());
    let ratio = norm(20.0).map_err(err)? / norm(10.0).map_err(err)?;
    let expect = ((delta - p.gamma) * 10.0).exp();
    let rel = (ratio / expect - 1.0).abs();
    let cfg = ChshConfig::optimal();
    let mut prev = f64::NEG_INFINITY;
    let mut monotone = true;
    for t in grid().filter(|&t| t >= 10.0) {
        let c = chsh_value(&p, &cfg, t).map_err(err)?.abs();
        monotone &= c > prev;
        prev = c;
    }
    ensure(
        rel <= TOL_GROWTH && monotone && (delta - DELTA_SINGLE_AXIS).abs() < 1e-12,
        format!("delta {delta:.6}, norm ratio {ratio:.4} vs {expect:.4} (rel {rel:.1e}), |chsh| monotone on [10,20]: {monotone}"),
    )
}

fn factorized_bounds() -> Check {
    let p = GeneratorParams::diagonal(1.0, 0.05, 0.2);
    let singlet = TwoQubitState::singlet();
    let states: Vec<TwoQubitState> = grid()
        .map(|t| propagator(&p, t).map(|g| evolve_with(&g, &singlet)))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..1000 {
        let theta = rng.random_range(0.0..PI);
        let phi = rng.random_range(-PI..PI);
        let n = loop {
            let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if v.norm() > 1e-3 && v.norm() <= 1.0 {
                break v.normalize();
            }
        };
        for rho in &states {
            for port in [Port::One, Port::Two] {
                for dir in [n, -n] {
                    let o = observable_expectation(rho, port, theta, phi, &dir).map_err(err)?;
                    lo = lo.min(o);
                    hi = hi.max(o);
                }
            }
        }
    }
    let min_eig = states.iter().map(|r| r.min_eigenvalue()).fold(f64::INFINITY, f64::min);
    ensure(
        lo >= -TOL_OBSERVABLE && hi <= 1.0 + TOL_OBSERVABLE && min_eig < 0.0,
        format!("observables in [{lo:.3e}, {hi:.12}] while min state eigenvalue is {min_eig:.4e}"),
    )
}

fn tomography_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = Matrix4::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m = a * a.adjoint();
        let rho = TwoQubitState::new(m / m.trace()).map_err(err)?;
        let rec = reconstruct(&simulate_record(&rho, Mode::Exact, 0).map_err(err)?).map_err(err)?;
        worst = worst.max(rec.max_abs_diff(&rho.coefficients()));
    }
    let p = GeneratorParams::diagonal(1.0, 0.05, 0.2);
    let rho = evolve_extended(&p, &TwoQubitState::singlet(), 1.0).map_err(err)?;
    let back = reconstruct(&simulate_record(&rho, Mode::Exact, 0).map_err(err)?)
        .map_err(err)?
        .to_state()
        .map_err(err)?;
    let m = back.matrix();
    let e_minus = m[(0, 0)].re;
    let f_abs = m[(1, 2)].norm();
    let (de, df) = ((e_minus - E_MINUS_T1).abs(), (f_abs - F_ABS_T1).abs());
    ensure(
        worst < TOL_ROUND_TRIP && de <= TOL_TOMO_VALUE && df <= TOL_TOMO_VALUE,
        format!("100 random states max error {worst:.1e}; E- = {e_minus:.7}, |F| = {f_abs:.7}"),
    )
}

fn perturbative_order() -> Check {
    let base = [0.012, -0.004, 0.003, 0.02, 0.005, 0.016];
    let error = |eps: f64| -> Result<f64, String> {
        let p = GeneratorParams::from_dissipation(1.0, base.map(|x| x * eps));
        let g = g_first_order(&p, 1.0, 5.0).map_err(err)?;
        let exact = propagator(&p, 5.0).map_err(err)?.matrix.fixed_view::<3, 3>(1, 1).into_owned();
        Ok((g.matrix - exact).amax())
    };
    let (e1, e2) = (error(1.0)?, error(0.5)?);
    let ratio = e1 / e2;
    ensure(
        (ORDER_RANGE.0..=ORDER_RANGE.1).contains(&ratio),
        format!("errors {e1:.3e} and {e2:.3e}, ratio {ratio:.3}"),
    )
}

fn monte_carlo_oracle() -> Check {
    let model = NoiseModel::diagonal_exp(0.05, 1.0, 1.0, 1.0, 1.0).map_err(err)?;
    let p = params_from_matrices(&markov_matrices(&model, 1.0).map_err(err)?, true).map_err(err)?;
    let start = SpinDensity::polarized(&Vector3::new(1.0, 0.0, 1.0).normalize()).map_err(err)?;
    let run = |threads| {
        let mut opts = OracleOptions::new(20_000, 2024);
        opts.threads = Some(threads);
        mc_compare(&model, 1.0, &p, &start, 10.0, &opts).map_err(err)
    };
    let one = run(1)?;
    let many = run(4)?;
    let identical = one.mean == many.mean && one.std_err == many.std_err;
    let bound = (3.0 * one.max_std_err).max(ORACLE_FLOOR);
    ensure(
        one.max_deviation < bound && identical,
        format!(
            "max deviation {:.3e} at t={:.2} vs bound {bound:.3e}; identical across 1 and 4 threads: {identical}",
            one.max_deviation, one.max_deviation_time
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("negative eigenvalue of the evolved singlet", negative_eigenvalue),
        ("completely positive generators keep the state positive", cp_safety),
        ("cp inequalities agree with the L_D eigenvalue test", cp_equivalence),
        ("closed-form propagators match the matrix exponential", propagator_closed_forms),
        ("CHSH baseline values", chsh_baseline),
        ("single-axis divergence", divergence),
        ("factorized observables stay in [0, 1]", factorized_bounds),
        ("tomography round trip", tomography_round_trip),
        ("first-order propagator is second-order accurate", perturbative_order),
        ("Monte Carlo oracle agrees with the master equation", monte_carlo_oracle),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
