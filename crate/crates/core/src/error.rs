use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Rotation angle too close to π for an unambiguous logarithm.
    #[error("rotation angle {angle} rad is within {margin:e} of pi")]
    NearSingularRotation { angle: f64, margin: f64 },

    #[error("degenerate thrust: |A| = {norm:e} N is below {threshold:e} N")]
    DegenerateThrust { norm: f64, threshold: f64 },

    #[error("heading singularity: |b3c x b1d| = {norm:e} is below {threshold:e}")]
    HeadingSingularity { norm: f64, threshold: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("telemetry schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for the controller degeneracies that abort a simulation run.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateThrust { .. }
                | Error::HeadingSingularity { .. }
                | Error::NearSingularRotation { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
