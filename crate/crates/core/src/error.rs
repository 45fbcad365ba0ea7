use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point {point:?} lies outside the domain")]
    PointOutsideDomain { point: Vec<f64> },

    #[error("weight {index} evaluates to {value}, below the lower bound {delta}")]
    WeightBelowDelta { index: usize, value: f64, delta: f64 },

    #[error("weights sum to {sum}, not 1")]
    SumNotOne { sum: f64 },

    #[error("map {map} has Lipschitz sum {sum} >= 1")]
    E1Violation { map: usize, sum: f64 },

    #[error("power system would have {words} words, above the cap of {cap}")]
    WordSpaceTooLarge { words: u128, cap: usize },

    #[error("no power up to the degree is contractive at sampled points (worst ratio {worst_ratio})")]
    NotEventuallyContractive { worst_ratio: f64 },

    #[error("{tuples} cell tuples exceed the budget of {cap}")]
    CellBudgetExceeded { tuples: u128, cap: u64 },

    #[error("no convergence after {iterations} iterations: gap {gap} > tol {tol}")]
    NoConvergence { iterations: usize, gap: f64, tol: f64 },

    #[error("empty set")]
    EmptySet,

    #[error("{atoms} atoms exceed the budget of {cap}")]
    AtomBudgetExceeded { atoms: u128, cap: usize },

    #[error("support of {atoms} atoms exceeds the transport cap of {cap}; prune first")]
    SupportTooLarge { atoms: usize, cap: usize },

    #[error("grid sets or measures are not defined on the same grid/ambient")]
    Mismatch,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("malformed description: {0}")]
    Schema(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}
