use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the physics layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("no signal configured")]
    NoSignal,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("calibration bracket exhausted: {0}")]
    CalibrationBracket(String),

    #[error("propagation unstable: {0}")]
    Unstable(String),

    #[error("reflection sentinel tripped: {0}")]
    Reflection(String),

    #[error("derivative singular at zero field")]
    SingularDerivative,

    #[error("level outside row range")]
    LevelOutsideRow,

    #[error("non-monotone flanks")]
    NonMonotoneFlanks,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
