use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, lengths or grids of the operands do not agree.
    #[error("structural error: {0}")]
    Structural(String),

    /// A grid or parameter set that cannot be used as requested.
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("operation `{op}` is not supported on {mode} grids")]
    UnsupportedMode { op: &'static str, mode: &'static str },

    #[error("undefined at the point {0:?}")]
    UndefinedPoint([f64; 3]),

    #[error("degenerate seed: {0}")]
    Seed(String),

    #[error("no convergence after {iterations} iterations (last residual {last:.3e})")]
    Convergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("iteration collapsed to the trivial solution")]
    Triviality,

    #[error("numerical fault at t = {time}: {reason}")]
    NumericalFault { time: f64, reason: String },

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("unknown series: {0}")]
    UnknownSeries(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }
}
