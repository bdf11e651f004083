use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index out of range: {what} = {index} (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not enough samples: need at least {needed}, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },

    #[error("sample covariance has rank {rank}, below the requested dimension {requested}")]
    RankDeficient { rank: usize, requested: usize },

    #[error("received variance is zero (all-zero design)")]
    DegenerateDesign,

    #[error("receive beamformer nulls device {device}")]
    BeamformerNullsDevice { device: usize },

    #[error("all channels are zero")]
    ZeroChannels,

    #[error("device distance must be positive (device {device})")]
    ZeroDistance { device: usize },

    #[error("degenerate SCA reference: gain variable {index} = {value:e}")]
    DegenerateReference { index: usize, value: f64 },

    #[error("subproblem solver failed with status {0}")]
    Solver(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
