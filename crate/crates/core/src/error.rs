use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index set cardinality binomial({d}+{p}, {p}) overflows u64")]
    CardinalityOverflow { d: usize, p: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parameter y[{index}] = {value} lies outside (-sqrt(3), sqrt(3))")]
    ParameterDomain { index: usize, value: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("coefficient positivity violated (value {value}, sample {sample:?})")]
    Positivity { value: f64, sample: Option<usize> },

    #[error("unsupported coefficient model: {0}")]
    UnsupportedModel(&'static str),

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged { iterations: usize, residual: f64 },

    #[error("sampling matrix is rank deficient (lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e})")]
    RankDeficient { lambda_min: f64, lambda_max: f64 },

    #[error("least-squares design is ill-conditioned (condition {condition:e}); increase m_ref")]
    IllConditioned { condition: f64 },

    #[error("at least {needed} samples required, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("reference field has zero norm")]
    ZeroReference,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed data file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("refusing to aggregate results from different configurations ({0} vs {1})")]
    MixedConfigs(String, String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
