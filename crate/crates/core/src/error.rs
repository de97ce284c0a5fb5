use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("{variant} noise model is not supported here; {hint}")]
    UnsupportedVariant {
        variant: &'static str,
        hint: &'static str,
    },

    #[error("no Lindblad form: L_D has eigenvalue {min_eigenvalue:e} < 0 (generator is not completely positive)")]
    NoLindbladForm { min_eigenvalue: f64 },

    #[error("quadrature did not reach tolerance {target:e}; achieved error bound {achieved:e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("integration step too large: h*(omega0 + 2 max|V|) = {value:.4} exceeds {limit}")]
    StepTooLarge { value: f64, limit: f64 },

    #[error("tomography record is missing setting (theta={theta}, phi={phi}, port={port}, direction={direction})")]
    MissingSetting {
        theta: &'static str,
        phi: &'static str,
        port: &'static str,
        direction: &'static str,
    },

    #[error("cannot sample counts: outcome probability {probability:e} is negative (state is not positive)")]
    SamplingImpossible { probability: f64 },

    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::UnsupportedVariant { .. } => 2,
            Error::MissingSetting { .. } => 2,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
            _ => 3,
        }
    }
}
