use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate weights: every sample has zero weight")]
    DegenerateWeights,

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conditioning outside support: prefix has zero marginal density")]
    ConditioningOutsideSupport,

    #[error("segment contract violated: y = {y} not in [{low}, {high})")]
    SegmentContract { y: f64, low: f64, high: f64 },

    #[error("index out of range: {index} not in 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty pilot: no pilot sample hit the support of the integrand")]
    EmptyPilot,

    #[error("degenerate spread: weighted sample variance is zero")]
    DegenerateSpread,

    #[error("no rare-event hits in pilot; increase M or strengthen trial tilt")]
    NoRareEventHits,

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("method `{method}` is not available for problem `{problem}`")]
    UnsupportedMethod { method: String, problem: String },

    #[error("replication {run} failed ({completed} of {runs} runs completed): {message}")]
    RunFailed {
        run: usize,
        completed: usize,
        runs: usize,
        message: String,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
