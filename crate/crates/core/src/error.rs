use std::path::PathBuf;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A sphere state at (or beyond) a pole, where one symbol has no phase.
    #[error("degenerate sphere state: |s1| = {s1} reaches block power {p}")]
    DegenerateState { s1: f64, p: f64 },

    #[error("operation not supported for {0} models")]
    UnsupportedModel(&'static str),

    /// The two unit-normalized symbols of a block cancel out.
    #[error("degenerate initial-phase estimate: symbols are antipodal")]
    DegenerateEstimate,

    /// The target vector has no component orthogonal to the constraint normal.
    #[error("degenerate trust-region solve: projected norm {projected:e} vs input norm {norm:e}")]
    DegenerateSolution { projected: f64, norm: f64 },

    #[error("target BER {target:e} is not bracketed by the swept points")]
    NotAchieved { target: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
