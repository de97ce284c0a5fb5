//! Neutron-interferometer measurement layer.
//!
//! The path factor passes a beam splitter `U(ϑ,φ)` and a counter behind exit
//! port `j`; the spin factor meets an analyzer along `n`. Port `j` at setting
//! `(ϑ,φ)` measures the path projector `P_j(ϑ,φ) = U† P_j U`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use nalgebra::{Complex, Vector3};
use serde::Serialize;

use crate::bloch::{c, spin_projector, Mat2, ProjectorFamily, C64};
use crate::dynamics::{hyperbolic_pair, kron, propagator, single_axis_delta_sq, Mat4c, Propagator, TwoQubitState};
use crate::error::{Error, Result};
use crate::markov::GeneratorParams;
use crate::perturbative::gf_perturbative_correlator;

const UNIT_TOL: f64 = 1e-12;

/// Beam-splitter angles `(ϑ, φ)` and analyzer direction `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelatorSetting {
    pub theta: f64,
    pub phi: f64,
    pub n: Vector3<f64>,
}

fn check_unit(n: &Vector3<f64>) -> Result<()> {
    let norm = n.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::validation(format!("analyzer direction is not unit (|n| = {norm})")));
    }
    Ok(())
}

impl CorrelatorSetting {
    pub fn new(theta: f64, phi: f64, n: Vector3<f64>) -> Result<Self> {
        check_unit(&n)?;
        Ok(CorrelatorSetting { theta, phi, n })
    }
}

/// Two beam-splitter settings and two analyzer directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshConfig {
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub n1: Vector3<f64>,
    pub n2: Vector3<f64>,
}

impl ChshConfig {
    pub fn new(first: (f64, f64), second: (f64, f64), n1: Vector3<f64>, n2: Vector3<f64>) -> Result<Self> {
        check_unit(&n1)?;
        check_unit(&n2)?;
        Ok(ChshConfig { first, second, n1, n2 })
    }

    /// Settings that reach `2√2` on the undamped singlet.
    pub fn optimal() -> Self {
        let s = FRAC_1_SQRT_2;
        ChshConfig {
            first: (0.0, 0.0),
            second: (FRAC_PI_4, 0.0),
            n1: Vector3::new(-s, 0.0, s),
            n2: Vector3::new(s, 0.0, s),
        }
    }

    /// The four settings in combination order; the last enters with a minus sign.
    pub fn settings(&self) -> [CorrelatorSetting; 4] {
        let mk = |(theta, phi): (f64, f64), n: Vector3<f64>| CorrelatorSetting { theta, phi, n };
        [
            mk(self.first, self.n1),
            mk(self.first, self.n2),
            mk(self.second, self.n1),
            mk(self.second, self.n2),
        ]
    }

    pub fn combine(values: [f64; 4]) -> f64 {
        values[0] + values[1] + values[2] - values[3]
    }
}

/// `G = (G13, G23, G33)` and `F = (G_i1 − i G_i2)_i` from the spatial block of
/// a propagator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GfVectors {
    pub g: Vector3<f64>,
    pub f: Vector3<C64>,
}

impl GfVectors {
    pub fn from_spatial(m: &nalgebra::Matrix3<f64>) -> Self {
        GfVectors {
            g: m.column(2).into_owned(),
            f: Vector3::from_fn(|i, _| Complex::new(m[(i, 0)], -m[(i, 1)])),
        }
    }

    pub fn from_propagator(g: &Propagator) -> Self {
        GfVectors::from_spatial(&g.matrix.fixed_view::<3, 3>(1, 1).into_owned())
    }

    /// `n · [cos2ϑ G − sin2ϑ Re(e^{−iφ} F)]`.
    pub fn correlator(&self, s: &CorrelatorSetting) -> f64 {
        let rot = Complex::from_polar(1.0, -s.phi);
        let re_f = self.f.map(|z| (rot * z).re);
        s.n.dot(&(self.g * (2.0 * s.theta).cos() - re_f * (2.0 * s.theta).sin()))
    }
}

/// Exit port of the beam splitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Port {
    One,
    Two,
}

impl Port {
    pub fn index(self) -> usize {
        match self {
            Port::One => 1,
            Port::Two => 2,
        }
    }
}

/// `p ψ_u⊗↓ + q ψ_d⊗↑` as a density matrix.
pub fn prepare_beam(p: C64, q: C64) -> Result<TwoQubitState> {
    TwoQubitState::beam(p, q)
}

/// `U(ϑ,φ) = [[e^{−iφ} sinϑ, cosϑ], [e^{−iφ} cosϑ, −sinϑ]]`.
pub fn beam_splitter(theta: f64, phi: f64) -> Mat2 {
    let e = Complex::from_polar(1.0, -phi);
    let (s, co) = theta.sin_cos();
    Mat2::new(e * s, c(co, 0.0), e * co, c(-s, 0.0))
}

/// `P_j(ϑ,φ) = U† P_j U`.
pub fn path_projector(port: Port, theta: f64, phi: f64) -> Mat2 {
    let u = beam_splitter(theta, phi);
    let f = ProjectorFamily::standard();
    u.adjoint() * f.path[port.index() - 1] * u
}

/// `(U ⊗ 1) ρ (U ⊗ 1)†`.
pub fn exit_transform(rho: &TwoQubitState, theta: f64, phi: f64) -> Result<TwoQubitState> {
    let u = kron(&beam_splitter(theta, phi), &Mat2::identity());
    TwoQubitState::new(u * rho.matrix() * u.adjoint())
}

fn joint_expectation(rho: &TwoQubitState, op: &Mat4c) -> f64 {
    (rho.matrix() * op).trace().re
}

/// `O^{j,n}(ϑ,φ) = Tr(ρ P_j(ϑ,φ) ⊗ Q_n)`. Values outside `[0, 1]` are returned
/// unchanged; they occur only for non-positive states.
pub fn observable_expectation(rho: &TwoQubitState, port: Port, theta: f64, phi: f64, n: &Vector3<f64>) -> Result<f64> {
    check_unit(n)?;
    Ok(joint_expectation(rho, &kron(&path_projector(port, theta, phi), &spin_projector(n))))
}

/// `C = O^{1,n} + O^{2,−n} − O^{1,−n} − O^{2,n}`.
pub fn correlator_trace(rho: &TwoQubitState, s: &CorrelatorSetting) -> Result<f64> {
    let (t, p, n) = (s.theta, s.phi, s.n);
    let o = |port, dir: Vector3<f64>| observable_expectation(rho, port, t, p, &dir);
    Ok(o(Port::One, n)? + o(Port::Two, -n)? - o(Port::One, -n)? - o(Port::Two, n)?)
}

/// Correlator of the evolved singlet through the `G`, `F` vectors of the propagator.
pub fn correlator_vector(p: &GeneratorParams, s: &CorrelatorSetting, t: f64) -> Result<f64> {
    check_unit(&s.n)?;
    Ok(GfVectors::from_propagator(&propagator(p, t)?).correlator(s))
}

/// CHSH combination for the evolved singlet.
pub fn chsh_value(p: &GeneratorParams, cfg: &ChshConfig, t: f64) -> Result<f64> {
    let gf = GfVectors::from_propagator(&propagator(p, t)?);
    Ok(ChshConfig::combine(cfg.settings().map(|s| gf.correlator(&s))))
}

/// CHSH combination evaluated by traces on an arbitrary state.
pub fn chsh_trace(rho: &TwoQubitState, cfg: &ChshConfig) -> Result<f64> {
    let [a, b, c2, d] = cfg.settings();
    Ok(ChshConfig::combine([
        correlator_trace(rho, &a)?,
        correlator_trace(rho, &b)?,
        correlator_trace(rho, &c2)?,
        correlator_trace(rho, &d)?,
    ]))
}

/// Which closed-form correlator to use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum AnalyticCase {
    /// First order in the dissipation for precession at `omega0` (any
    /// dissipation shape; the Hamiltonian shift is ignored).
    WhitePerturbative { omega0: f64 },
    /// Phase-covariant damping.
    Diagonal,
    /// Field along one transverse axis.
    SingleAxis,
    /// No dissipation.
    Closed,
}

fn shape_error(case: &str, what: &str) -> Error {
    Error::validation(format!("parameters do not fit the {case} correlator: {what}"))
}

fn scale(p: &GeneratorParams) -> f64 {
    p.dissipation().iter().chain(p.h.iter()).fold(1.0f64, |m, x| m.max(x.abs()))
}

pub fn analytic_correlator(case: AnalyticCase, p: &GeneratorParams, s: &CorrelatorSetting, t: f64) -> Result<f64> {
    check_unit(&s.n)?;
    let tol = 1e-12 * scale(p);
    let (n1, n2, n3) = (s.n[0], s.n[1], s.n[2]);
    let (c2, s2) = ((2.0 * s.theta).cos(), (2.0 * s.theta).sin());
    let w = p.precession();
    if !matches!(case, AnalyticCase::WhitePerturbative { .. }) && (p.h[0].abs() > tol || p.h[1].abs() > tol) {
        return Err(shape_error("closed-form", "h1 and h2 must vanish"));
    }
    match case {
        AnalyticCase::Closed => {
            if p.dissipation().iter().any(|x| x.abs() > tol) {
                return Err(shape_error("undamped", "all dissipation parameters must vanish"));
            }
            Ok(-n1 * s2 * (w * t - s.phi).cos() - n2 * s2 * (w * t - s.phi).sin() + n3 * c2)
        }
        AnalyticCase::Diagonal => {
            if p.b.abs() > tol || p.c.abs() > tol || p.beta.abs() > tol || (p.a - p.alpha).abs() > tol {
                return Err(shape_error("diagonal", "need b = c = beta = 0 and alpha = a"));
            }
            let x = w * t - s.phi;
            Ok((-2.0 * p.gamma * t).exp() * c2 * n3
                - (-2.0 * p.a * t).exp() * s2 * (n1 * x.cos() + n2 * x.sin()))
        }
        AnalyticCase::SingleAxis => {
            if p.a.abs() > tol || p.c.abs() > tol || p.beta.abs() > tol || (p.alpha - p.gamma).abs() > tol {
                return Err(shape_error("single-axis", "need a = c = beta = 0 and alpha = gamma"));
            }
            let g = p.gamma;
            let d2 = single_axis_delta_sq(p);
            let (ch, sh) = hyperbolic_pair(d2, t);
            let (sp, cp) = s.phi.sin_cos();
            let t1 = (ch + g * sh) * cp + (w + 2.0 * p.b) * sh * sp;
            let t2 = (-ch + g * sh) * sp + (w - 2.0 * p.b) * sh * cp;
            Ok((-2.0 * g * t).exp() * c2 * n3 - (-g * t).exp() * s2 * (n1 * t1 + n2 * t2))
        }
        AnalyticCase::WhitePerturbative { omega0 } => gf_perturbative_correlator(p, omega0, s, t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve_extended;
    use std::f64::consts::{PI, SQRT_2};

    fn z() -> Vector3<f64> {
        Vector3::new(0.0, 0.0, 1.0)
    }

    #[test]
    fn beam_preparations() {
        let s = FRAC_1_SQRT_2;
        let singlet = prepare_beam(c(s, 0.0), c(-s, 0.0)).unwrap();
        let ev = singlet.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-12 && ev[1..].iter().all(|x| x.abs() < 1e-12));

        let prod = prepare_beam(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let f = ProjectorFamily::standard();
        let expected = kron(&f.path[0], &f.spin[1]);
        assert!((prod.matrix() - expected).iter().all(|z| z.norm() < 1e-15));

        let sym = prepare_beam(c(s, 0.0), c(s, 0.0)).unwrap();
        assert!((sym.trace().re - 1.0).abs() < 1e-15);
        assert!(sym.eigenvalues()[1].abs() < 1e-12);

        assert!(prepare_beam(c(1.0, 0.0), c(0.1, 0.0)).is_err());
    }

    #[test]
    fn beam_matches_coefficient_form() {
        let (p, q) = (Complex::from_polar(0.6, 0.3), Complex::from_polar(0.8, -1.1));
        let beam = prepare_beam(p, q).unwrap();
        let mut k = [[c(0.0, 0.0); 4]; 4];
        k[0][1] = c(p.norm_sqr(), 0.0);
        k[1][0] = c(q.norm_sqr(), 0.0);
        k[2][3] = p * q.conj();
        k[3][2] = p.conj() * q;
        let built = TwoQubitState::from_coefficients(&k).unwrap();
        assert!(beam.max_abs_diff(&built) < 1e-15);
    }

    #[test]
    fn exit_transform_is_unitary() {
        let rho = evolve_extended(&GeneratorParams::diagonal(1.0, 0.05, 0.2), &TwoQubitState::singlet(), 1.0).unwrap();
        for (t, p) in [(PI / 2.0, 0.0), (0.3, 1.2), (FRAC_PI_4, 0.0)] {
            let out = exit_transform(&rho, t, p).unwrap();
            let (a, b) = (rho.eigenvalues(), out.eigenvalues());
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12));
        }
        let twice = exit_transform(&exit_transform(&rho, FRAC_PI_4, 0.0).unwrap(), FRAC_PI_4, 0.0).unwrap();
        let u = beam_splitter(FRAC_PI_4, 0.0);
        let uu = kron(&(u * u), &Mat2::identity());
        let direct = TwoQubitState::new(uu * rho.matrix() * uu.adjoint()).unwrap();
        assert!(twice.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn projector_identities() {
        let f = ProjectorFamily::standard();
        let close = |a: &Mat2, b: &Mat2| (a - b).iter().all(|z| z.norm() < 1e-15);
        assert!(close(&path_projector(Port::One, 0.0, 0.0), &f.path[1]));
        assert!(close(&path_projector(Port::Two, 0.0, 0.0), &f.path[0]));
        assert!(close(&path_projector(Port::One, FRAC_PI_4, 0.0), &f.p_plus));
        assert!(close(&path_projector(Port::Two, FRAC_PI_4, 0.0), &f.p_minus));
        assert!(close(&path_projector(Port::One, FRAC_PI_4, -PI / 2.0), &f.p_plus_i));
        assert!(close(&path_projector(Port::Two, FRAC_PI_4, -PI / 2.0), &f.p_minus_i));
    }

    #[test]
    fn singlet_expectations() {
        let s = TwoQubitState::singlet();
        let o = |port, n: Vector3<f64>| observable_expectation(&s, port, 0.0, 0.0, &n).unwrap();
        assert!((o(Port::One, z()) - 0.5).abs() < 1e-15);
        assert!(o(Port::One, -z()).abs() < 1e-15);
        assert!(o(Port::Two, z()).abs() < 1e-15);
        assert!((o(Port::Two, -z()) - 0.5).abs() < 1e-15);

        let mixed = TwoQubitState::maximally_mixed();
        let n = Vector3::new(0.48, 0.6, 0.64);
        let mut total = 0.0;
        for port in [Port::One, Port::Two] {
            for dir in [n, -n] {
                let v = observable_expectation(&mixed, port, 0.7, -0.4, &dir).unwrap();
                assert!((v - 0.25).abs() < 1e-15);
                total += observable_expectation(&s, port, 0.7, -0.4, &dir).unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn correlator_examples() {
        let s = TwoQubitState::singlet();
        let c1 = correlator_trace(&s, &CorrelatorSetting::new(0.0, 0.0, z()).unwrap()).unwrap();
        assert!((c1 - 1.0).abs() < 1e-15);
        let x = Vector3::new(1.0, 0.0, 0.0);
        let c2 = correlator_trace(&s, &CorrelatorSetting::new(FRAC_PI_4, 0.0, x).unwrap()).unwrap();
        assert!((c2 + 1.0).abs() < 1e-15);
        let m = TwoQubitState::maximally_mixed();
        assert!(correlator_trace(&m, &CorrelatorSetting::new(0.4, 0.1, x).unwrap()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn vector_and_trace_routes_agree() {
        let params = [
            GeneratorParams::diagonal(1.0, 0.05, 0.2),
            GeneratorParams::from_dissipation(1.3, [0.1, 0.02, -0.03, 0.2, 0.01, 0.15]),
            GeneratorParams::from_dissipation(0.2, [0.0, 0.3, 0.0, 0.1, 0.0, 0.1]),
        ];
        let n = Vector3::new(0.48, 0.6, 0.64);
        for p in &params {
            for &(theta, phi, t) in &[(0.3, 0.2, 0.5), (1.1, -0.7, 2.0), (FRAC_PI_4, 0.0, 7.0)] {
                let s = CorrelatorSetting::new(theta, phi, n).unwrap();
                let rho = evolve_extended(p, &TwoQubitState::singlet(), t).unwrap();
                let a = correlator_trace(&rho, &s).unwrap();
                let b = correlator_vector(p, &s, t).unwrap();
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn chsh_examples() {
        let closed = GeneratorParams::closed(1.0);
        let v = chsh_value(&closed, &ChshConfig::optimal(), 0.0).unwrap();
        assert!((v - 2.0 * SQRT_2).abs() < 1e-12);
        let trace = chsh_trace(&TwoQubitState::singlet(), &ChshConfig::optimal()).unwrap();
        assert!((trace - 2.0 * SQRT_2).abs() < 1e-12);

        let p = GeneratorParams::diagonal(1.0, 0.15, 0.2);
        let v = chsh_value(&p, &ChshConfig::optimal(), 2.0 * PI).unwrap();
        assert!((v - 0.32928321483196904).abs() < 1e-12);
        assert!(chsh_value(&p, &ChshConfig::optimal(), 200.0).unwrap().abs() < 1e-20);
    }

    #[test]
    fn analytic_cases_match_vector_route() {
        let n = Vector3::new(0.48, 0.6, 0.64);
        let cases = [
            (AnalyticCase::Closed, GeneratorParams::closed(1.3)),
            (AnalyticCase::Diagonal, GeneratorParams::diagonal(1.0, 0.05, 0.2)),
            (AnalyticCase::SingleAxis, GeneratorParams::from_dissipation(0.2, [0.0, 0.3, 0.0, 0.1, 0.0, 0.1])),
            (AnalyticCase::SingleAxis, GeneratorParams::from_dissipation(1.0, [0.0, -0.005, 0.0, 0.01, 0.0, 0.01])),
        ];
        for (case, p) in cases {
            for k in 0..20 {
                let t = 0.5 * k as f64;
                let s = CorrelatorSetting::new(0.2 + 0.1 * k as f64, -0.3 * k as f64, n).unwrap();
                let a = analytic_correlator(case, &p, &s, t).unwrap();
                let b = correlator_vector(&p, &s, t).unwrap();
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{case:?} t={t}: {a} vs {b}");
            }
        }
        let bad = GeneratorParams::from_dissipation(1.0, [0.1, 0.01, 0.0, 0.1, 0.0, 0.2]);
        let s = CorrelatorSetting::new(0.1, 0.0, n).unwrap();
        assert!(analytic_correlator(AnalyticCase::Diagonal, &bad, &s, 1.0).is_err());
        assert!(analytic_correlator(AnalyticCase::Closed, &bad, &s, 1.0).is_err());
    }
}
