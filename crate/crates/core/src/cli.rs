//! Subcommand implementations behind the `cplab` binary.

use std::f64::consts::SQRT_2;

use nalgebra::{Matrix3, Vector3};
use serde_json::{json, Value};

use crate::bloch::SpinDensity;
use crate::config::{Format, InitialState, RunConfig};
use crate::dynamics::{evolve_with, propagator};
use crate::error::{Error, Result};
use crate::interferometer::{chsh_trace, chsh_value, correlator_trace, CorrelatorSetting};
use crate::markov::lindblad_operators;
use crate::oracle::{mc_compare, OracleOptions};
use crate::perturbative::g_first_order;
use crate::positivity::classify;
use crate::tomography::{reconstruct, simulate_record, Mode};

/// Exit code when the oracle deviation exceeds its budget.
pub const EXIT_BUDGET: i32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Generator,
    Evolve,
    Chsh,
    Correlator { theta: f64, phi: f64, n: [f64; 3] },
    Tomography,
    Oracle,
    Perturbative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub exit_code: i32,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome {
            text,
            exit_code: 0,
            warnings: Vec::new(),
        }
    }
}

/// Full double precision, 17 significant digits. Negative zero prints as zero.
fn fmt(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

fn render_table(format: Format, header: &[String], rows: &[Vec<f64>]) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.write_record(r.iter().map(|x| fmt(*x)))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => {
            let objs: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(header.iter().cloned().zip(r.iter().map(|x| json!(x))).collect()))
                .collect();
            Ok(serde_json::to_string_pretty(&objs)? + "\n")
        }
    }
}

fn rows_of(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn run(cmd: &Command, cfg: &RunConfig, threads: Option<usize>) -> Result<Outcome> {
    match cmd {
        Command::Generator => cmd_generator(cfg),
        Command::Evolve => cmd_evolve(cfg),
        Command::Chsh => cmd_chsh(cfg),
        Command::Correlator { theta, phi, n } => cmd_correlator(cfg, *theta, *phi, *n),
        Command::Tomography => cmd_tomography(cfg),
        Command::Oracle => cmd_oracle(cfg, threads),
        Command::Perturbative => cmd_perturbative(cfg),
    }
}

pub fn cmd_generator(cfg: &RunConfig) -> Result<Outcome> {
    let pl = cfg.pipeline()?;
    let p = &pl.params;
    let verdict = classify(p)?;
    let lindblad = match lindblad_operators(&pl.matrices) {
        Ok(ops) => json!(ops
            .iter()
            .map(|a| {
                (0..2)
                    .map(|i| (0..2).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()),
        Err(Error::NoLindbladForm { .. }) => Value::Null,
        Err(e) => return Err(e),
    };
    let report = json!({
        "source": if pl.noise.is_some() { "noise" } else { "generator" },
        "noise_model": pl.noise.as_ref().map(|n| n.name()),
        "omega0": cfg.omega0,
        "include_lamb_shift": cfg.include_lamb_shift,
        "c_a": rows_of(&pl.matrices.c_a),
        "l_d": rows_of(&pl.matrices.l_d),
        "params": {
            "h": [p.h[0], p.h[1], p.h[2]],
            "a": p.a, "b": p.b, "c": p.c,
            "alpha": p.alpha, "beta": p.beta, "gamma": p.gamma,
            "lamb_shift": p.lamb_shift,
            "t1": p.t1(),
            "t2": p.t2(),
        },
        "verdict": {
            "class": verdict.class.label(),
            "positivity_margin": verdict.positivity_margin,
            "cp_margin": verdict.cp_margin,
            "inequalities": verdict.inequalities,
        },
        "lindblad_operators": lindblad,
    });
    Ok(Outcome::ok(serde_json::to_string_pretty(&report)? + "\n"))
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.pipeline()?.params;
    let times = cfg.times();
    let (header, rows) = match cfg.state.build()? {
        InitialState::Spin(s) => {
            let v = s.bloch();
            let rows = times
                .iter()
                .map(|&t| Ok(std::iter::once(t).chain(propagator(&p, t)?.apply(&v).0).collect()))
                .collect::<Result<Vec<Vec<f64>>>>()?;
            (labels(&["t", "rho0", "rho1", "rho2", "rho3"]), rows)
        }
        InitialState::Entangled(rho) => {
            let mut header = vec!["t".to_string()];
            for i in 1..=4 {
                for j in 1..=4 {
                    header.push(format!("rho{i}{j}_re"));
                    header.push(format!("rho{i}{j}_im"));
                }
            }
            header.extend((1..=4).map(|k| format!("eig{k}")));
            let mut rows = Vec::with_capacity(times.len());
            for &t in &times {
                let out = evolve_with(&propagator(&p, t)?, &rho);
                let mut row = vec![t];
                for line in out.coefficients() {
                    for z in line {
                        row.extend([z.re, z.im]);
                    }
                }
                row.extend(out.eigenvalues());
                rows.push(row);
            }
            (header, rows)
        }
    };
    Ok(Outcome::ok(render_table(cfg.output.format, &header, &rows)?))
}

fn entangled_state(cfg: &RunConfig) -> Result<crate::dynamics::TwoQubitState> {
    match cfg.state.build()? {
        InitialState::Entangled(r) => Ok(r),
        InitialState::Spin(_) => Err(Error::Config(
            "this subcommand needs a path-spin state ([state] kind = singlet or beam)".into(),
        )),
    }
}

pub fn cmd_chsh(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.pipeline()?.params;
    let rho = entangled_state(cfg)?;
    let singlet = matches!(cfg.state, crate::config::StateSection::Singlet);
    let header = labels(&["config", "t", "c11", "c12", "c21", "c22", "chsh", "classical_bound", "tsirelson_bound"]);
    let mut rows = Vec::new();
    for (k, c) in cfg.chsh_configs()?.iter().enumerate() {
        for &t in &cfg.times() {
            let g = propagator(&p, t)?;
            let evolved = evolve_with(&g, &rho);
            let mut vals = [0.0; 4];
            for (v, s) in vals.iter_mut().zip(c.settings()) {
                *v = correlator_trace(&evolved, &s)?;
            }
            let total = if singlet { chsh_value(&p, c, t)? } else { chsh_trace(&evolved, c)? };
            let mut row = vec![k as f64, t];
            row.extend(vals);
            row.extend([total, 2.0, 2.0 * SQRT_2]);
            rows.push(row);
        }
    }
    Ok(Outcome::ok(render_table(cfg.output.format, &header, &rows)?))
}

pub fn cmd_correlator(cfg: &RunConfig, theta: f64, phi: f64, n: [f64; 3]) -> Result<Outcome> {
    let p = cfg.pipeline()?.params;
    let rho = entangled_state(cfg)?;
    let s = CorrelatorSetting::new(theta, phi, Vector3::from(n)).map_err(|e| Error::Config(e.to_string()))?;
    let rows = cfg
        .times()
        .iter()
        .map(|&t| Ok(vec![t, correlator_trace(&evolve_with(&propagator(&p, t)?, &rho), &s)?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome::ok(render_table(cfg.output.format, &labels(&["t", "correlator"]), &rows)?))
}

pub fn cmd_tomography(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.pipeline()?.params;
    let t = cfg.tomography.time;
    let rho = evolve_with(&propagator(&p, t)?, &entangled_state(cfg)?);
    let mode = cfg.tomography_mode();
    let rec = simulate_record(&rho, mode, cfg.tomography.seed)?;
    let text = match cfg.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            rec.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        Format::Json => {
            let r = reconstruct(&rec)?;
            let eigenvalues = r.to_state()?.eigenvalues();
            let record: Vec<Value> = rec
                .entries
                .iter()
                .map(|(&(a, port, d), v)| {
                    let (theta, phi) = a.labels();
                    json!({"theta": theta, "phi": phi, "port": port.index(), "direction": d.label(), "expectation": v})
                })
                .collect();
            let report = json!({
                "time": t,
                "shots": match mode { Mode::Exact => None, Mode::Shots(n) => Some(n) },
                "record": record,
                "reconstruction": r.to_json(),
                "eigenvalues": eigenvalues,
                "max_error": r.max_abs_diff(&rho.coefficients()),
            });
            serde_json::to_string_pretty(&report)? + "\n"
        }
    };
    Ok(Outcome::ok(text))
}

pub fn cmd_oracle(cfg: &RunConfig, threads: Option<usize>) -> Result<Outcome> {
    let pl = cfg.pipeline()?;
    let model = pl
        .noise
        .ok_or_else(|| Error::Config("the oracle needs a [noise] section to sample from".into()))?;
    let start = match cfg.state.build()? {
        InitialState::Spin(s) => s,
        InitialState::Entangled(_) => SpinDensity::polarized(&Vector3::new(1.0, 0.0, 0.0))?,
    };
    let opts = OracleOptions {
        trajectories: cfg.oracle.trajectories,
        seed: cfg.oracle.seed,
        step: cfg.oracle.step,
        threads,
    };
    let report = mc_compare(&model, cfg.omega0, &pl.params, &start, cfg.horizon, &opts)?;
    let text = match cfg.output.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => {
            let header = labels(&[
                "t", "mean1", "mean2", "mean3", "se1", "se2", "se3", "master1", "master2", "master3",
            ]);
            let rows: Vec<Vec<f64>> = (0..report.times.len())
                .map(|k| {
                    let mut r = vec![report.times[k]];
                    r.extend(&report.mean[k][1..]);
                    r.extend(report.std_err[k]);
                    r.extend(&report.master[k][1..]);
                    r
                })
                .collect();
            render_table(Format::Csv, &header, &rows)?
        }
    };
    let mut warnings = report.warnings.clone();
    let exit_code = if report.within_budget {
        0
    } else {
        warnings.push(format!(
            "oracle deviation {:.3e} exceeds max(3 standard errors = {:.3e}, budget = {:.3e})",
            report.max_deviation,
            3.0 * report.max_std_err,
            report.truncation_budget
        ));
        EXIT_BUDGET
    };
    Ok(Outcome {
        text,
        exit_code,
        warnings,
    })
}

/// First-order propagator entries against the exact exponential of the same
/// dissipator with `h = (0, 0, ω₀/2)`.
pub fn cmd_perturbative(cfg: &RunConfig) -> Result<Outcome> {
    let mut p = cfg.pipeline()?.params;
    p.h = Vector3::new(0.0, 0.0, cfg.omega0 / 2.0);
    let mut header = vec!["t".to_string()];
    for kind in ["first", "exact"] {
        for i in 1..=3 {
            for j in 1..=3 {
                header.push(format!("{kind}{i}{j}"));
            }
        }
    }
    header.push("max_error".into());
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &t in &cfg.times() {
        let pg = g_first_order(&p, cfg.omega0, t)?;
        if let Some(w) = &pg.warning {
            if warnings.is_empty() {
                warnings.push(w.clone());
            }
        }
        let exact = propagator(&p, t)?.matrix.fixed_view::<3, 3>(1, 1).into_owned();
        let mut row = vec![t];
        row.extend(rows_of(&pg.matrix).iter().flatten());
        row.extend(rows_of(&exact).iter().flatten());
        row.push((pg.matrix - exact).amax());
        rows.push(row);
    }
    Ok(Outcome {
        text: render_table(cfg.output.format, &header, &rows)?,
        exit_code: 0,
        warnings,
    })
}
