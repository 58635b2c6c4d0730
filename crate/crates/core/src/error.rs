use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid scenario at `{path}`: {msg}")]
    InvalidScenario { path: String, msg: String },

    #[error("type {0} has no strategy with finite cost")]
    NoFiniteStrategy(usize),

    #[error("the infimum of the energy is +inf: no plan of finite cost exists")]
    InfimumInfinite,

    #[error("search space of {size} profiles exceeds the limit of {limit}")]
    SizeLimit { size: f64, limit: f64 },

    #[error("gluing operator is not consistent at x = {x}, y = {y}")]
    InconsistentGluing { x: usize, y: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn scenario(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::InvalidScenario { path: path.into(), msg: msg.into() }
    }
}
