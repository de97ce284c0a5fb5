//! Decay of the CHSH combination for the singlet under diagonal dissipation,
//! and its growth when the transverse block has a real positive mode.

use std::f64::consts::PI;

use cplab::interferometer::{chsh_value, ChshConfig};
use cplab::markov::GeneratorParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ChshConfig::optimal();
    let free = GeneratorParams::closed(1.0);
    println!("no dissipation, t=0: {:.12}", chsh_value(&free, &cfg, 0.0)?);

    let damped = GeneratorParams::diagonal(1.0, 0.15, 0.2);
    for k in 0..=4 {
        let t = k as f64 * PI / 2.0;
        println!("damped  t={t:>7.4}  chsh={:>10.6}", chsh_value(&damped, &cfg, t)?);
    }

    let growing = GeneratorParams::from_dissipation(0.2, [0.0, 0.3, 0.0, 0.1, 0.0, 0.1]);
    for t in [0.0, 5.0, 10.0, 15.0, 20.0] {
        println!("growing t={t:>7.4}  chsh={:>12.4}", chsh_value(&growing, &cfg, t)?);
    }
    Ok(())
}
