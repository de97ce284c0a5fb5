//! Virtual tomography of the evolved singlet from interferometer outcomes,
//! exact and with finite shots.

use cplab::dynamics::{evolve_extended, TwoQubitState};
use cplab::markov::GeneratorParams;
use cplab::tomography::{reconstruct, simulate_record, Mode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = GeneratorParams::diagonal(1.0, 0.05, 0.2);
    let rho = evolve_extended(&p, &TwoQubitState::singlet(), 1.0)?;
    let truth = rho.coefficients();

    let exact = reconstruct(&simulate_record(&rho, Mode::Exact, 0)?)?;
    println!("exact      max error {:.2e}", exact.max_abs_diff(&truth));
    println!("           eigenvalues {:?}", exact.to_state()?.eigenvalues());

    for shots in [1_000, 10_000, 100_000, 1_000_000] {
        let r = reconstruct(&simulate_record(&rho, Mode::Shots(shots), 99)?)?;
        println!("{shots:>9}  max error {:.2e}", r.max_abs_diff(&truth));
    }
    Ok(())
}
