use thiserror::Error;

/// Errors raised by instance handling, evaluators and solvers.
///
/// Test indices in messages are 1-based, matching the CLI and file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("n must be positive")]
    EmptyInstance,
    #[error("k out of range: k={k}, n={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("n field ({declared}) does not match number of tests ({actual})")]
    CountMismatch { declared: usize, actual: usize },
    #[error("interval inverted at index {index}")]
    IntervalInverted { index: usize },
    #[error("probability out of range at index {index}")]
    ProbabilityOutOfRange { index: usize },
    #[error("negative or non-finite cost at index {index}")]
    InvalidCost { index: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("probability vector leaves the uncertainty box at index {index}")]
    OutsideUncertaintySet { index: usize },
    #[error("instance too large for exhaustive search: n={n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("instance is not epsilon-bounded for any epsilon > 0")]
    ZeroEpsilon,
    #[error("stage {nu} outside 1..={max}")]
    StageOutOfRange { nu: usize, max: usize },
    #[error("not in overlap case: expected-value window does not meet [k-1, k]")]
    NotOverlapCase,
    #[error("straddling path infeasible at stage {stage}")]
    PathInfeasible { stage: usize },
    #[error("endpoint of test {index} is not on the 1/n^3 grid")]
    OffGrid { index: usize },
    #[error("moment-compressed search needs strictly positive costs (test {index})")]
    NonPositiveCost { index: usize },
    #[error("moment count d must be at least 1")]
    ZeroMoments,
    #[error("compressed state space exceeded {limit} states at stage {stage}")]
    StateLimit { stage: usize, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
