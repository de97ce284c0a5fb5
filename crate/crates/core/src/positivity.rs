//! Positivity and complete positivity of Bloch generators.
//!
//! A generator is positive iff `M = [[a,b,c],[b,α,β],[c,β,γ]]` is positive
//! semidefinite, and completely positive iff the Kossakowski matrix `L_D`
//! rebuilt from the same parameters is. The CP test is phrased through the
//! principal minors of `L_D` in terms of `R, S, T`.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::GeneratorParams;

/// Eigenvalues (and scaled minors) above `−PSD_TOL` count as nonnegative.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PositivityClass {
    CompletelyPositive,
    PositiveNotCP,
    NotPositive,
}

impl PositivityClass {
    pub fn label(&self) -> &'static str {
        match self {
            PositivityClass::CompletelyPositive => "completely_positive",
            PositivityClass::PositiveNotCP => "positive_not_cp",
            PositivityClass::NotPositive => "not_positive",
        }
    }
}

/// The seven quantities that must be nonnegative for complete positivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CpInequalities {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub rs_b2: f64,
    pub rt_c2: f64,
    pub st_beta2: f64,
    pub det: f64,
}

impl CpInequalities {
    pub fn new(p: &GeneratorParams) -> Self {
        let r = (p.alpha + p.gamma - p.a) / 2.0;
        let s = (p.a + p.gamma - p.alpha) / 2.0;
        let t = (p.a + p.alpha - p.gamma) / 2.0;
        let (b, c, be) = (p.b, p.c, p.beta);
        CpInequalities {
            r,
            s,
            t,
            rs_b2: r * s - b * b,
            rt_c2: r * t - c * c,
            st_beta2: s * t - be * be,
            det: r * s * t - 2.0 * b * c * be - r * be * be - s * c * c - t * b * b,
        }
    }

    /// All seven hold, with the tolerance scaled to each quantity's degree.
    pub fn hold(&self, scale: f64) -> bool {
        let tol1 = PSD_TOL;
        let tol2 = PSD_TOL * scale;
        let tol3 = PSD_TOL * scale * scale;
        self.r >= -tol1
            && self.s >= -tol1
            && self.t >= -tol1
            && self.rs_b2 >= -tol2
            && self.rt_c2 >= -tol2
            && self.st_beta2 >= -tol2
            && self.det >= -tol3
    }
}

fn scale(p: &GeneratorParams) -> f64 {
    p.dissipation().iter().fold(1.0f64, |m, x| m.max(x.abs()))
}

/// Positivity of the semigroup on single-spin states; margin is the
/// smallest eigenvalue of `M`.
pub fn check_positive(p: &GeneratorParams) -> (bool, f64) {
    let margin = SymmetricEigen::new(p.dissipation_matrix()).eigenvalues.min();
    (margin >= -PSD_TOL, margin)
}

/// Complete positivity; margin is the smallest eigenvalue of `L_D`.
pub fn check_cp(p: &GeneratorParams) -> (bool, f64) {
    let margin = SymmetricEigen::new(p.l_d()).eigenvalues.min();
    (CpInequalities::new(p).hold(scale(p)), margin)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PositivityVerdict {
    pub class: PositivityClass,
    pub positivity_margin: f64,
    pub cp_margin: f64,
    pub inequalities: CpInequalities,
}

pub fn classify(p: &GeneratorParams) -> Result<PositivityVerdict> {
    p.validate()?;
    let (pos, positivity_margin) = check_positive(p);
    let (cp, cp_margin) = check_cp(p);
    if cp && positivity_margin < -3.0 * PSD_TOL * scale(p) {
        return Err(Error::InternalConsistency(format!(
            "completely positive generator with non-positive dissipation matrix (margin {positivity_margin:e})"
        )));
    }
    let class = if cp {
        PositivityClass::CompletelyPositive
    } else if pos {
        PositivityClass::PositiveNotCP
    } else {
        PositivityClass::NotPositive
    };
    Ok(PositivityVerdict {
        class,
        positivity_margin,
        cp_margin,
        inequalities: CpInequalities::new(p),
    })
}
