//! Relaxation of a single spin: closed forms against the matrix exponential.

use cplab::bloch::BlochVector;
use cplab::dynamics::{analytic_diag, analytic_single_axis, propagator, single_axis_delta_sq};
use cplab::markov::GeneratorParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let start = BlochVector::new(0.5, 0.4, 0.0, 0.3);

    let diag = GeneratorParams::diagonal(1.0, 0.05, 0.2);
    println!("diagonal a=0.05 gamma=0.2, T1={:?} T2={:?}", diag.t1(), diag.t2());
    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "t", "rho1", "rho2", "rho3", "error");
    for k in 0..=10 {
        let t = k as f64;
        let exact = propagator(&diag, t)?.apply(&start);
        let closed = analytic_diag(&diag, &start, t)?;
        let [_, x, y, z] = closed.0;
        println!("{t:>6.1} {x:>12.6} {y:>12.6} {z:>12.6} {:>10.1e}", exact.max_abs_diff(&closed));
    }

    // b > ω/2 so the transverse block has real, growing modes.
    let axis = GeneratorParams::from_dissipation(0.2, [0.0, 0.3, 0.0, 0.1, 0.0, 0.1]);
    let delta = single_axis_delta_sq(&axis).sqrt();
    println!("\nsingle axis gamma=0.1 b=0.3 omega=0.2, delta={delta:.6}");
    for t in [0.0, 5.0, 10.0, 20.0] {
        let v = analytic_single_axis(&axis, &start, t)?;
        let err = propagator(&axis, t)?.apply(&start).max_abs_diff(&v);
        println!("t={t:>4}  transverse norm {:>12.6}  error {err:.1e}", v.transverse_norm());
    }
    Ok(())
}
