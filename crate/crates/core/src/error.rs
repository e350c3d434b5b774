use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("residual sum of squares must be positive, got {0}")]
    DegenerateRss(f64),

    #[error("not enough degrees of freedom: n = {n}, p = {p}")]
    InvalidDof { n: usize, p: usize },

    #[error("noiseless field is identically zero; SNR is undefined")]
    ZeroField,

    #[error("no true positives to match parameters against")]
    NoMatches,

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scenario generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
