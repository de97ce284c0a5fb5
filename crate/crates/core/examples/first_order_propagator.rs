//! First-order propagator in the dissipation against the exact one.

use cplab::dynamics::propagator;
use cplab::markov::GeneratorParams;
use cplab::perturbative::g_first_order;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = [0.012, -0.004, 0.003, 0.02, 0.005, 0.016];
    let mut last = None;
    for eps in [2.0, 1.0, 0.5, 0.25] {
        let p = GeneratorParams::from_dissipation(1.0, base.map(|x| x * eps));
        let g = g_first_order(&p, 1.0, 5.0)?;
        let exact = propagator(&p, 5.0)?.matrix.fixed_view::<3, 3>(1, 1).into_owned();
        let err = (g.matrix - exact).amax();
        let ratio = last.map(|l: f64| format!("{:.3}", l / err)).unwrap_or_default();
        println!("scale {eps:<5} error {err:.3e}  ratio {ratio}");
        last = Some(err);
        if let Some(w) = g.warning {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
