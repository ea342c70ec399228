use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("edge probability {0} outside (0, 1]")]
    InvalidProbability(f64),
    #[error("no connected graph found after {attempts} attempts")]
    ConnectivityTimeout { attempts: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cost {index} has no analytic gradient")]
    NoAnalyticGradient { index: usize },
    #[error("solver did not converge within {0} iterations")]
    MaxIterations(usize),

    #[error("dither period {0} is shorter than 3")]
    PeriodTooShort(u64),
    #[error("duplicate dither frequency with period {0}")]
    DuplicateFrequency(u64),
    #[error("frequency sum collision: 1/{p} + 1/{h} = 1/{l}")]
    SumCollision { p: u64, h: u64, l: u64 },
    #[error("frequency alias collision among periods {0:?}")]
    AliasCollision(Vec<u64>),
    #[error("dither dimension must be positive")]
    EmptyDimension,
    #[error("expected {expected} odd-component periods, got {got}")]
    PeriodCount { expected: usize, got: usize },
    #[error("common period overflows u64")]
    Overflow,

    #[error("non-finite state entry (step size too large?)")]
    NonFinite,
    #[error("round {round}: {source}")]
    AtRound { round: usize, source: Box<Error> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("all {0} Monte Carlo instances failed")]
    AllInstancesFailed(usize),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Strips any round annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtRound { source, .. } => source.root(),
            e => e,
        }
    }
}
