use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("negative rate q({row},{col}) = {value}")]
    NegativeRate { row: usize, col: usize, value: f64 },
    #[error("entry ({row},{col}) = {value} outside [0,1]")]
    BadEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected {expected}")]
    BadRowSum { row: usize, sum: f64, expected: f64 },
    #[error("chain is reducible: state {state} ({label}) breaks strong connectivity")]
    Reducible { state: usize, label: String },
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("discrete-time operation needs an integer time, got {0}")]
    NonIntegerTime(f64),
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("operation requires a {expected} chain")]
    WrongMode { expected: &'static str },
    #[error("target set must be nonempty")]
    EmptyTargetSet,
    #[error("state index {index} out of range for {n} states")]
    BadState { index: usize, n: usize },
    #[error("linear solver failed: {0}")]
    SolverFailure(String),
    #[error("n = {n} exceeds the exact-enumeration cap {cap} (use heuristic mode)")]
    TooLargeForExact { n: usize, cap: usize },
    #[error("alpha must lie in {range}, got {value}")]
    BadAlpha { value: f64, range: &'static str },
    #[error("delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("bad time argument: {0}")]
    BadTime(String),
    #[error("rule was built for a different chain")]
    ChainMismatch,
    #[error("stopping-rule construction failed: {0}")]
    ConstructionFailure(String),
    #[error("unknown family: {0}")]
    UnknownFamily(String),
    #[error("bad family size: {0}")]
    BadSize(String),
    #[error("bad size list: {0}")]
    BadSizes(String),
    #[error("horizon must be positive")]
    BadHorizon,
    #[error("chain is not reversible")]
    NotReversible,
    #[error("invalid distribution: {0}")]
    BadDistribution(String),
    #[error("search did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
