use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator dimension {0} exceeds the dense limit")]
    DimensionOverflow(usize),

    #[error("invalid truncation: n_max must be at least 1, got {0}")]
    InvalidTruncation(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state norm {0} is outside the normalization tolerance")]
    NotNormalized(f64),

    #[error("expectation value has imaginary part {0:e} for an observable treated as Hermitian")]
    NonRealExpectation(f64),

    #[error("density matrix invariant violated at t = {time}: {what}")]
    InvariantViolation { time: f64, what: String },

    #[error("no sign change of L_{n} found while bracketing its smallest zero")]
    BracketFailure { n: usize },

    #[error("step size underflow at t = {time} (h = {step:e})")]
    StepSizeUnderflow { time: f64, step: f64 },

    #[error("correlation undefined: <b^dag^N b^N> = {0:e} is below the floor")]
    UndefinedCorrelation(f64),

    #[error("empty window [{0}, {1}]")]
    EmptyWindow(f64, f64),

    #[error("trajectory norm underflow at t = {0} without a threshold crossing")]
    NormUnderflow(f64),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
