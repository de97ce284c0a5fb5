//! Compares the ensemble average of noisy unitary precessions with the
//! Markovian semigroup for exponentially correlated noise.

use cplab::bloch::SpinDensity;
use cplab::markov::{markov_matrices, params_from_matrices};
use cplab::noise::NoiseModel;
use cplab::oracle::{mc_compare, OracleOptions};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let omega0 = 1.0;
    let model = NoiseModel::diagonal_exp(0.05, 1.0, 1.0, 1.0, 1.0)?;
    let params = params_from_matrices(&markov_matrices(&model, omega0)?, true)?;
    let start = SpinDensity::polarized(&Vector3::new(1.0, 0.0, 1.0).normalize())?;

    let report = mc_compare(&model, omega0, &params, &start, 10.0, &OracleOptions::new(20_000, 2024))?;
    println!("trajectories        {}", report.trajectories);
    println!("step                {:.5}", report.step);
    println!("max deviation       {:.3e} at t = {:.3}", report.max_deviation, report.max_deviation_time);
    println!("max standard error  {:.3e}", report.max_std_err);
    println!("truncation budget   {:.3e}", report.truncation_budget);
    println!("within budget       {}", report.within_budget);
    println!("min eigenvalue      {:.4}", report.min_state_eigenvalue);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
