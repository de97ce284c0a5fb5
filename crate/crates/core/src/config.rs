//! TOML run configuration shared by the command-line subcommands.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use crate::bloch::{BlochVector, SpinDensity, C64};
use crate::dynamics::TwoQubitState;
use crate::error::{Error, Result};
use crate::interferometer::ChshConfig;
use crate::markov::{markov_matrices, matrices_from_params, params_from_matrices, GeneratorParams, MarkovMatrices};
use crate::noise::NoiseModel;
use crate::tomography::Mode;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSection {
    None {},
    White { strength: [[f64; 3]; 3] },
    DiagonalExp { g: f64, b1: f64, b3: f64, lambda: f64, mu: f64 },
    SingleAxis { g: f64, b: f64, lambda: f64 },
}

impl NoiseSection {
    pub fn model(&self) -> Result<NoiseModel> {
        match *self {
            NoiseSection::None {} => Ok(NoiseModel::none()),
            NoiseSection::White { strength } => {
                NoiseModel::white(Matrix3::from_fn(|i, j| strength[i][j]))
            }
            NoiseSection::DiagonalExp { g, b1, b3, lambda, mu } => NoiseModel::diagonal_exp(g, b1, b3, lambda, mu),
            NoiseSection::SingleAxis { g, b, lambda } => NoiseModel::single_axis(g, b, lambda),
        }
    }
}

/// Generator given directly by its parameters instead of through a noise model.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    /// Defaults to `(0, 0, ω₀/2)`.
    pub h: Option<[f64; 3]>,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSection {
    /// Beam preparation with `p = −q = 1/√2`.
    #[default]
    Singlet,
    /// Beam preparation with amplitudes `[re, im]`.
    Beam { p: [f64; 2], q: [f64; 2] },
    /// Single spin with polarization vector `|n| ≤ 1`.
    Spin { polarization: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Spin(SpinDensity),
    Entangled(TwoQubitState),
}

impl StateSection {
    pub fn build(&self) -> Result<InitialState> {
        match self {
            StateSection::Singlet => Ok(InitialState::Entangled(TwoQubitState::singlet())),
            StateSection::Beam { p, q } => Ok(InitialState::Entangled(TwoQubitState::beam(
                C64::new(p[0], p[1]),
                C64::new(q[0], q[1]),
            )?)),
            StateSection::Spin { polarization } => {
                let n = Vector3::from(*polarization);
                if n.norm() > 1.0 + 1e-12 {
                    return Err(Error::Config(format!("spin polarization has norm {} > 1", n.norm())));
                }
                let v = n * 0.5;
                Ok(InitialState::Spin(crate::bloch::from_bloch(BlochVector::new(0.5, v[0], v[1], v[2]))))
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshEntry {
    pub first: [f64; 2],
    pub second: [f64; 2],
    pub n1: [f64; 3],
    pub n2: [f64; 3],
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshSection {
    #[serde(default)]
    pub settings: Vec<ChshEntry>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    #[serde(default)]
    pub time: f64,
    /// Omitted means exact expectations.
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TomographySection {
    fn default() -> Self {
        TomographySection {
            time: 0.0,
            shots: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    pub step: Option<f64>,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            trajectories: default_trajectories(),
            seed: 0,
            step: None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn default_trajectories() -> usize {
    2000
}

fn default_true() -> bool {
    true
}

fn default_horizon() -> f64 {
    20.0
}

fn default_steps() -> u32 {
    crate::dynamics::DEFAULT_SCAN_STEPS as u32
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub omega0: f64,
    #[serde(default = "default_true")]
    pub include_lamb_shift: bool,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_steps")]
    pub steps: u32,
    pub noise: Option<NoiseSection>,
    pub generator: Option<GeneratorSection>,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub chsh: ChshSection,
    #[serde(default)]
    pub tomography: TomographySection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub steps: Option<u32>,
    pub no_lamb_shift: bool,
}

/// Generator together with the Markov matrices it came from.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub noise: Option<NoiseModel>,
    pub matrices: MarkovMatrices,
    pub params: GeneratorParams,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(s) = o.seed {
            self.oracle.seed = s;
            self.tomography.seed = s;
        }
        if let Some(h) = o.horizon {
            self.horizon = h;
        }
        if let Some(s) = o.steps {
            self.steps = s;
        }
        if o.no_lamb_shift {
            self.include_lamb_shift = false;
        }
        self.check()
    }

    fn check(&self) -> Result<()> {
        if !self.omega0.is_finite() {
            return Err(Error::Config("omega0 must be finite".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be > 0 (got {})", self.horizon)));
        }
        if self.steps < 1 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        match (&self.noise, &self.generator) {
            (Some(_), Some(_)) => Err(Error::Config("give either [noise] or [generator], not both".into())),
            (None, None) => Err(Error::Config("missing [noise] or [generator] section".into())),
            _ => Ok(()),
        }
    }

    pub fn pipeline(&self) -> Result<Pipeline> {
        if let Some(n) = &self.noise {
            let model = n.model()?;
            let matrices = markov_matrices(&model, self.omega0)?;
            let params = params_from_matrices(&matrices, self.include_lamb_shift)?;
            return Ok(Pipeline {
                noise: Some(model),
                matrices,
                params,
            });
        }
        let g = self.generator.as_ref().expect("checked in RunConfig::check");
        let mut params = GeneratorParams::from_dissipation(self.omega0, [g.a, g.b, g.c, g.alpha, g.beta, g.gamma]);
        if let Some(h) = g.h {
            params.h = Vector3::from(h);
        }
        params.validate()?;
        Ok(Pipeline {
            noise: None,
            matrices: matrices_from_params(&params),
            params,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.horizon * k as f64 / self.steps as f64).collect()
    }

    pub fn chsh_configs(&self) -> Result<Vec<ChshConfig>> {
        if self.chsh.settings.is_empty() {
            return Ok(vec![ChshConfig::optimal()]);
        }
        self.chsh
            .settings
            .iter()
            .map(|e| {
                ChshConfig::new(
                    (e.first[0], e.first[1]),
                    (e.second[0], e.second[1]),
                    Vector3::from(e.n1),
                    Vector3::from(e.n2),
                )
                .map_err(|err| Error::Config(format!("chsh settings: {err}")))
            })
            .collect()
    }

    pub fn tomography_mode(&self) -> Mode {
        match self.tomography.shots {
            Some(n) => Mode::Shots(n),
            None => Mode::Exact,
        }
    }
}
