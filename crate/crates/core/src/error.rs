use std::path::PathBuf;

/// Errors raised by learners, oracles, instance generators and the harness.
///
/// Every variant carries a stable kebab-case code (see [`Error::code`]) so that
/// callers, the CLI and the Python bindings can match on failure kinds without
/// parsing messages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("no-rounds: leader requested for an empty history")]
    NoRounds,
    #[error("loss-range: loss {value} outside {expected}")]
    LossRange { value: f64, expected: &'static str },
    #[error("weight-domain: weight {0} is negative or not finite")]
    WeightDomain(f64),
    #[error("empty-support: all sampling weights are zero")]
    EmptySupport,
    #[error("weight-underflow: implied weight {0} became negative")]
    WeightUnderflow(f64),
    #[error("horizon-exceeded: round {round} is past the horizon {horizon}")]
    HorizonExceeded { round: usize, horizon: usize },
    #[error("horizon: number of rounds must be at least 1")]
    Horizon,
    #[error("payoff-range: payoff {value} at ({row}, {col}) outside [0, 1]")]
    PayoffRange { row: usize, col: usize, value: f64 },
    #[error("param-domain: {0}")]
    ParamDomain(String),
    #[error("not-globally-consistent: function has {0} local maxima")]
    NotGloballyConsistent(usize),
    #[error("domain: {0}")]
    Domain(String),
    #[error("index-range: index {index} outside [0, {bound})")]
    IndexRange { index: usize, bound: usize },
    #[error("distribution: {0}")]
    Distribution(String),
    #[error("spec-error: {0}")]
    Spec(String),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NoRounds => "no-rounds",
            Error::LossRange { .. } => "loss-range",
            Error::WeightDomain(_) => "weight-domain",
            Error::EmptySupport => "empty-support",
            Error::WeightUnderflow(_) => "weight-underflow",
            Error::HorizonExceeded { .. } => "horizon-exceeded",
            Error::Horizon => "horizon",
            Error::PayoffRange { .. } => "payoff-range",
            Error::ParamDomain(_) => "param-domain",
            Error::NotGloballyConsistent(_) => "not-globally-consistent",
            Error::Domain(_) => "domain",
            Error::IndexRange { .. } => "index-range",
            Error::Distribution(_) => "distribution",
            Error::Spec(_) => "spec-error",
            Error::Io { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
