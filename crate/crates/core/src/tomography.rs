//! Virtual tomography of the path–spin state from counter expectations.
//!
//! Only genuine projectors are measured: beam-splitter settings
//! `(0,0)`, `(π/4,0)`, `(π/4,−π/2)`, both exit ports, and spin analyzers along
//! `±x, ±y, ±z`. The coefficients `ρ_ij = Tr(ρ P_i† ⊗ Q_j†)` are linear
//! combinations of these 36 numbers.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::io::Write;

use nalgebra::{Complex, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::bloch::C64;
use crate::dynamics::TwoQubitState;
use crate::error::{Error, Result};
use crate::interferometer::{observable_expectation, Port};
use crate::noise::trajectory_seed;

/// Probabilities below `−NEGATIVE_TOL` cannot be sampled.
pub const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Angles {
    /// `(ϑ, φ) = (0, 0)`
    Zero,
    /// `(π/4, 0)`
    QuarterReal,
    /// `(π/4, −π/2)`
    QuarterImag,
}

impl Angles {
    pub const ALL: [Angles; 3] = [Angles::Zero, Angles::QuarterReal, Angles::QuarterImag];

    pub fn values(self) -> (f64, f64) {
        match self {
            Angles::Zero => (0.0, 0.0),
            Angles::QuarterReal => (FRAC_PI_4, 0.0),
            Angles::QuarterImag => (FRAC_PI_4, -FRAC_PI_2),
        }
    }

    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            Angles::Zero => ("0", "0"),
            Angles::QuarterReal => ("pi/4", "0"),
            Angles::QuarterImag => ("pi/4", "-pi/2"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Direction {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    PlusZ,
    MinusZ,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::PlusX,
        Direction::MinusX,
        Direction::PlusY,
        Direction::MinusY,
        Direction::PlusZ,
        Direction::MinusZ,
    ];

    pub fn vector(self) -> Vector3<f64> {
        match self {
            Direction::PlusX => Vector3::new(1.0, 0.0, 0.0),
            Direction::MinusX => Vector3::new(-1.0, 0.0, 0.0),
            Direction::PlusY => Vector3::new(0.0, 1.0, 0.0),
            Direction::MinusY => Vector3::new(0.0, -1.0, 0.0),
            Direction::PlusZ => Vector3::new(0.0, 0.0, 1.0),
            Direction::MinusZ => Vector3::new(0.0, 0.0, -1.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::PlusX => "+x",
            Direction::MinusX => "-x",
            Direction::PlusY => "+y",
            Direction::MinusY => "-y",
            Direction::PlusZ => "+z",
            Direction::MinusZ => "-z",
        }
    }

    fn opposite(self) -> Self {
        match self {
            Direction::PlusX => Direction::MinusX,
            Direction::MinusX => Direction::PlusX,
            Direction::PlusY => Direction::MinusY,
            Direction::MinusY => Direction::PlusY,
            Direction::PlusZ => Direction::MinusZ,
            Direction::MinusZ => Direction::PlusZ,
        }
    }
}

fn port_label(p: Port) -> &'static str {
    match p {
        Port::One => "1",
        Port::Two => "2",
    }
}

pub type SettingKey = (Angles, Port, Direction);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    Exact,
    Shots(u64),
}

/// Expectations `O^{j,n}(ϑ,φ)` keyed by setting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TomographyRecord {
    pub entries: BTreeMap<SettingKey, f64>,
    /// Draws per `(angles, axis)` group in shots mode.
    pub shots: Option<u64>,
}

impl TomographyRecord {
    pub fn get(&self, angles: Angles, port: Port, dir: Direction) -> Result<f64> {
        self.entries.get(&(angles, port, dir)).copied().ok_or_else(|| {
            let (theta, phi) = angles.labels();
            Error::MissingSetting {
                theta,
                phi,
                port: port_label(port),
                direction: dir.label(),
            }
        })
    }

    /// Columns `theta, phi, port, direction, expectation`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "phi", "port", "direction", "expectation"])?;
        for (&(a, p, d), v) in &self.entries {
            let (theta, phi) = a.labels();
            w.write_record([theta, phi, port_label(p), d.label(), &format!("{:.16e}", v + 0.0)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Expectation table for `rho`, exactly or as multinomial frequencies.
/// Each `(angles, axis)` group is one four-outcome experiment
/// `{(1,+n), (1,−n), (2,+n), (2,−n)}`.
pub fn simulate_record(rho: &TwoQubitState, mode: Mode, seed: u64) -> Result<TomographyRecord> {
    let mut entries = BTreeMap::new();
    for a in Angles::ALL {
        let (theta, phi) = a.values();
        for d in Direction::ALL {
            for port in [Port::One, Port::Two] {
                entries.insert((a, port, d), observable_expectation(rho, port, theta, phi, &d.vector())?);
            }
        }
    }
    let shots = match mode {
        Mode::Exact => None,
        Mode::Shots(n) => {
            if n == 0 {
                return Err(Error::validation("shot count must be positive"));
            }
            let mut group = 0u64;
            for a in Angles::ALL {
                for d in [Direction::PlusX, Direction::PlusY, Direction::PlusZ] {
                    let keys = [
                        (a, Port::One, d),
                        (a, Port::One, d.opposite()),
                        (a, Port::Two, d),
                        (a, Port::Two, d.opposite()),
                    ];
                    let probs = keys.map(|k| entries[&k]);
                    let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(seed, group));
                    let counts = multinomial(n, probs, &mut rng)?;
                    for (k, c) in keys.iter().zip(counts) {
                        entries.insert(*k, c as f64 / n as f64);
                    }
                    group += 1;
                }
            }
            Some(n)
        }
    };
    Ok(TomographyRecord { entries, shots })
}

fn multinomial(n: u64, probs: [f64; 4], rng: &mut ChaCha8Rng) -> Result<[u64; 4]> {
    if let Some(&p) = probs.iter().find(|&&p| p < -NEGATIVE_TOL) {
        return Err(Error::SamplingImpossible { probability: p });
    }
    let probs = probs.map(|p| p.max(0.0));
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    let mut out = [0u64; 4];
    for k in 0..3 {
        if left == 0 || mass <= 0.0 {
            break;
        }
        let q = (probs[k] / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(left, q)
            .map_err(|e| Error::InternalConsistency(format!("binomial sampler: {e}")))?
            .sample(rng);
        out[k] = draw;
        left -= draw;
        mass -= probs[k];
    }
    out[3] = left;
    Ok(out)
}

/// Sixteen coefficients `ρ_ij`, indexed from zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reconstruction(pub [[C64; 4]; 4]);

impl Reconstruction {
    pub fn to_state(&self) -> Result<TwoQubitState> {
        TwoQubitState::from_coefficients(&self.0)
    }

    pub fn max_abs_diff(&self, other: &[[C64; 4]; 4]) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// JSON object `{"entries": [{"i", "j", "re", "im"}, ...]}` with 1-based indices.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<_> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| {
                serde_json::json!({
                    "i": i + 1,
                    "j": j + 1,
                    "re": self.0[i][j].re,
                    "im": self.0[i][j].im,
                })
            })
            .collect();
        serde_json::json!({ "entries": entries })
    }
}

pub fn reconstruct(rec: &TomographyRecord) -> Result<Reconstruction> {
    let o = |a, p, d| rec.get(a, p, d);
    let i = Complex::new(0.0, 1.0);
    // ⟨P ⊗ σ_k⟩ for the path projector behind `port`
    let spin_diff = |a, port, axis: Direction| -> Result<f64> { Ok(o(a, port, axis)? - o(a, port, axis.opposite())?) };
    // ⟨σ_a ⊗ Q⟩: path σ1 from (π/4,0), σ2 from (π/4,−π/2)
    let path_diff = |a, d| -> Result<f64> { Ok(o(a, Port::One, d)? - o(a, Port::Two, d)?) };

    let mut r = [[C64::new(0.0, 0.0); 4]; 4];
    // at (0,0) port 2 sees P1 (ψ_u) and port 1 sees P2 (ψ_d)
    for (row, port) in [(0, Port::Two), (1, Port::One)] {
        r[row][0] = Complex::from(o(Angles::Zero, port, Direction::PlusZ)?);
        r[row][1] = Complex::from(o(Angles::Zero, port, Direction::MinusZ)?);
        let dx = spin_diff(Angles::Zero, port, Direction::PlusX)?;
        let dy = spin_diff(Angles::Zero, port, Direction::PlusY)?;
        r[row][2] = (dx - i * dy) / 2.0;
        r[row][3] = (dx + i * dy) / 2.0;
    }
    for (col, d) in [(0, Direction::PlusZ), (1, Direction::MinusZ)] {
        let s1 = path_diff(Angles::QuarterReal, d)?;
        let s2 = path_diff(Angles::QuarterImag, d)?;
        r[2][col] = (s1 - i * s2) / 2.0;
        r[3][col] = (s1 + i * s2) / 2.0;
    }
    // T_ab = ⟨σ_a ⊗ σ_b⟩ for a, b ∈ {1, 2}
    let t = |a, axis| -> Result<f64> {
        Ok(spin_diff(a, Port::One, axis)? - spin_diff(a, Port::Two, axis)?)
    };
    let t11 = t(Angles::QuarterReal, Direction::PlusX)?;
    let t12 = t(Angles::QuarterReal, Direction::PlusY)?;
    let t21 = t(Angles::QuarterImag, Direction::PlusX)?;
    let t22 = t(Angles::QuarterImag, Direction::PlusY)?;
    r[2][2] = (t11 - i * t12 - i * t21 - t22) / 4.0;
    r[2][3] = (t11 + i * t12 - i * t21 + t22) / 4.0;
    r[3][2] = (t11 - i * t12 + i * t21 + t22) / 4.0;
    r[3][3] = (t11 + i * t12 + i * t21 - t22) / 4.0;
    Ok(Reconstruction(r))
}
