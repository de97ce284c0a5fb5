//! From a noise correlation function to the Markovian generator and its
//! positivity class, for each of the built-in noise families.

use cplab::markov::{markov_matrices, params_from_matrices};
use cplab::noise::NoiseModel;
use cplab::positivity::classify;
use nalgebra::Matrix3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let omega0 = 1.0;
    let models = [
        NoiseModel::white(Matrix3::from_diagonal(&[0.004, 0.004, 0.008].into()))?,
        NoiseModel::diagonal_exp(0.1, 1.0, 1.0, 1.0, 2.0)?,
        NoiseModel::single_axis(0.1, 1.0, 1.0)?,
        NoiseModel::none(),
    ];
    for model in &models {
        let m = markov_matrices(model, omega0)?;
        let p = params_from_matrices(&m, true)?;
        let v = classify(&p)?;
        println!("{}", model.name());
        println!("  L_D diagonal     {:?}", [m.l_d[(0, 0)], m.l_d[(1, 1)], m.l_d[(2, 2)]]);
        println!("  a alpha gamma    {:.6} {:.6} {:.6}", p.a, p.alpha, p.gamma);
        println!("  b c beta         {:.6} {:.6} {:.6}", p.b, p.c, p.beta);
        println!("  lamb shift       {:.6e}", p.lamb_shift);
        println!("  class            {} (cp margin {:.3e})", v.class.label(), v.cp_margin);
    }
    Ok(())
}
