//! First-order propagator for weak dissipation on top of Larmor precession.
//!
//! Terms linear in `t` from the dissipator are absorbed into the decay
//! factors `e^{−(a+α)t}` and `e^{−2γt}`; the remaining corrections are
//! bounded oscillations of relative size `dissipation/ω₀`.

use nalgebra::{Complex, Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interferometer::{CorrelatorSetting, GfVectors};
use crate::markov::GeneratorParams;

/// Above this ratio of dissipation to `ω₀` a warning is attached.
pub const WEAK_RATIO: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbativeG {
    pub t: f64,
    pub omega0: f64,
    /// Spatial 3×3 block of the propagator.
    pub matrix: Matrix3<f64>,
    /// `|B|² = (a − α)² + 4b²`.
    pub b_abs: f64,
    /// `atan2(2b, α − a)`.
    pub phi_b: f64,
    /// `|C|² = c² + β²`.
    pub c_abs: f64,
    /// `atan2(β, c)`.
    pub phi_c: f64,
    /// Set when the dissipation is not small against `ω₀`.
    pub warning: Option<String>,
}

impl PerturbativeG {
    pub fn gf_vectors(&self) -> GfVectors {
        GfVectors::from_spatial(&self.matrix)
    }
}

fn regime_warning(p: &GeneratorParams, omega0: f64) -> Option<String> {
    let max = p.dissipation().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (max > WEAK_RATIO * omega0.abs()).then(|| {
        format!("dissipation {max:e} exceeds {WEAK_RATIO}·omega0; first-order formulas are unreliable")
    })
}

pub fn g_first_order(p: &GeneratorParams, omega0: f64, t: f64) -> Result<PerturbativeG> {
    p.validate()?;
    if omega0 == 0.0 || !omega0.is_finite() {
        return Err(Error::validation("first-order propagator needs a finite, nonzero omega0"));
    }
    let GeneratorParams { a, b, c, alpha, beta, gamma, .. } = *p;
    let w = omega0;
    let e = (-(a + alpha) * t).exp();
    let (s, co) = (w * t).sin_cos();
    let (sh, ch) = (w * t / 2.0).sin_cos();
    let k = -4.0 / w * sh;
    let matrix = Matrix3::new(
        e * co + (alpha - a) / w * s,
        -(e + 2.0 * b / w) * s,
        k * (c * ch - beta * sh),
        (e - 2.0 * b / w) * s,
        e * co + (a - alpha) / w * s,
        k * (beta * ch + c * sh),
        k * (c * ch + beta * sh),
        -k * (c * sh - beta * ch),
        (-2.0 * gamma * t).exp(),
    );
    Ok(PerturbativeG {
        t,
        omega0,
        matrix,
        b_abs: ((a - alpha).powi(2) + 4.0 * b * b).sqrt(),
        phi_b: (2.0 * b).atan2(alpha - a),
        c_abs: (c * c + beta * beta).sqrt(),
        phi_c: beta.atan2(c),
        warning: regime_warning(p, omega0),
    })
}

/// `G` and `F` in amplitude–phase form.
pub fn gf_vectors_perturbative(p: &GeneratorParams, omega0: f64, t: f64) -> Result<GfVectors> {
    let pg = g_first_order(p, omega0, t)?;
    let (w, bm, pb, cm, pc) = (omega0, pg.b_abs, pg.phi_b, pg.c_abs, pg.phi_c);
    let x = w * t / 2.0;
    let e = (-(p.a + p.alpha) * t).exp();
    let amp = 4.0 * cm / w * x.sin();
    let g = Vector3::new(-amp * (x + pc).cos(), -amp * (x + pc).sin(), (-2.0 * p.gamma * t).exp());
    let rot = Complex::from_polar(1.0, w * t);
    let corr = Complex::from_polar(bm / w * (w * t).sin(), pb);
    let i = Complex::new(0.0, 1.0);
    let f = Vector3::new(
        rot * e + corr,
        -i * rot * e + i * corr,
        -Complex::from_polar(amp, x - pc),
    );
    Ok(GfVectors { g, f })
}

/// Correlator of the evolved singlet to first order in the dissipation.
pub fn gf_perturbative_correlator(p: &GeneratorParams, omega0: f64, s: &CorrelatorSetting, t: f64) -> Result<f64> {
    let pg = g_first_order(p, omega0, t)?;
    let (w, bm, pb, cm, pc) = (omega0, pg.b_abs, pg.phi_b, pg.c_abs, pg.phi_c);
    let (n1, n2, n3) = (s.n[0], s.n[1], s.n[2]);
    let (c2, s2) = ((2.0 * s.theta).cos(), (2.0 * s.theta).sin());
    let x = w * t / 2.0;
    let e = (-(p.a + p.alpha) * t).exp();
    let amp = 4.0 * cm / w * x.sin();
    let ph = s.phi;
    let r1 = e * (w * t - ph).cos() + bm / w * (w * t).sin() * (ph - pb).cos();
    let r2 = e * (w * t - ph).sin() + bm / w * (w * t).sin() * (ph - pb).sin();
    let r3 = -amp * (x - ph - pc).cos();
    Ok(n1 * (-amp * c2 * (x + pc).cos() - s2 * r1)
        + n2 * (-amp * c2 * (x + pc).sin() - s2 * r2)
        + n3 * ((-2.0 * p.gamma * t).exp() * c2 - s2 * r3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::propagator;
    use crate::markov::rotation_u;

    fn generic() -> GeneratorParams {
        GeneratorParams::from_dissipation(1.0, [0.012, -0.004, 0.003, 0.02, 0.005, 0.016])
    }

    fn spatial(p: &GeneratorParams, t: f64) -> Matrix3<f64> {
        propagator(p, t).unwrap().matrix.fixed_view::<3, 3>(1, 1).into_owned()
    }

    #[test]
    fn zero_dissipation_is_rotation() {
        let p = GeneratorParams::closed(1.7);
        let g = g_first_order(&p, 1.7, 2.3).unwrap();
        assert!((g.matrix - rotation_u(1.7, 2.3)).amax() < 1e-15);
        assert!(g.warning.is_none());
    }

    #[test]
    fn diagonal_entries() {
        let p = GeneratorParams::diagonal(1.0, 0.03, 0.05);
        let g = g_first_order(&p, 1.0, 3.0).unwrap().matrix;
        assert!((g[(0, 0)] - (-0.18f64).exp() * 3.0f64.cos()).abs() < 1e-15);
        assert!((g[(2, 2)] - (-0.3f64).exp()).abs() < 1e-15);
        for (i, j) in [(0, 2), (1, 2), (2, 0), (2, 1)] {
            assert_eq!(g[(i, j)], 0.0);
        }
    }

    #[test]
    fn second_order_error() {
        let err = |eps: f64| {
            let d = generic().dissipation().map(|x| x * eps);
            let p = GeneratorParams::from_dissipation(1.0, d);
            (g_first_order(&p, 1.0, 5.0).unwrap().matrix - spatial(&p, 5.0)).amax()
        };
        let ratio = err(1.0) / err(0.5);
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn amplitude_form_matches_entries() {
        let p = generic();
        for k in 0..30 {
            let t = 0.37 * k as f64;
            let a = g_first_order(&p, 1.0, t).unwrap().gf_vectors();
            let b = gf_vectors_perturbative(&p, 1.0, t).unwrap();
            assert!((a.g - b.g).amax() < 1e-14);
            assert!((a.f - b.f).iter().all(|z| z.norm() < 1e-14));
            let s = CorrelatorSetting::new(0.3 + 0.05 * k as f64, 0.7 - 0.2 * k as f64, Vector3::new(0.48, 0.6, 0.64)).unwrap();
            let c = gf_perturbative_correlator(&p, 1.0, &s, t).unwrap();
            assert!((c - a.correlator(&s)).abs() < 1e-14);
        }
    }

    #[test]
    fn vector_examples() {
        let p = GeneratorParams::diagonal(1.0, 0.01, 0.02);
        let gf = gf_vectors_perturbative(&p, 1.0, 4.0).unwrap();
        assert!((gf.g[2] - (-0.16f64).exp()).abs() < 1e-15);
        assert_eq!((gf.g[0], gf.g[1]), (0.0, 0.0));
    }

    #[test]
    fn guards() {
        assert!(matches!(g_first_order(&generic(), 0.0, 1.0), Err(Error::Validation(_))));
        let strong = GeneratorParams::diagonal(1.0, 0.3, 0.2);
        assert!(g_first_order(&strong, 1.0, 1.0).unwrap().warning.is_some());
    }
}
