//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by problem construction, solving, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("constant column {0}")]
    ConstantColumn(usize),

    #[error("column {0} is not covered by any group")]
    UncoveredColumn(usize),

    #[error("group {group} lists column {column} more than once")]
    DuplicateColumn { group: usize, column: usize },

    #[error("group {group} references column {column}, but the design has {p} columns")]
    ColumnOutOfRange { group: usize, column: usize, p: usize },

    #[error("group {0} is empty")]
    EmptyGroup(usize),

    #[error("no groups were supplied")]
    NoGroups,

    #[error("logistic response must be 0 or 1 (row {0})")]
    NonBinaryResponse(usize),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("group {0} has a numerically zero design block")]
    ZeroGroupMatrix(usize),

    #[error("matrix is numerically zero")]
    ZeroMatrix,

    #[error("step constant must be strictly positive")]
    NonPositiveStep,

    #[error("subset enumeration needs {required} restricted fits, over the budget of {budget}")]
    EnumerationBudget { required: u128, budget: u128 },

    #[error("all groups are active; the penalty sequence terminates")]
    AllGroupsActive,

    #[error("training fold {0} contains a single response class; stratified folds are required")]
    SingleClassFold(usize),

    #[error("predictor {predictor} has only {distinct} distinct values; the spline basis needs at least {needed}")]
    TooFewDistinctValues {
        predictor: usize,
        distinct: usize,
        needed: usize,
    },

    #[error("relative estimation error is undefined: the true function values are all zero")]
    ZeroTruthNorm,

    #[error("invalid synthetic-data specification: {0}")]
    InvalidSpec(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("solver error at grid point (secondary {secondary}, primary {primary}): {source}")]
    PathPoint {
        secondary: usize,
        primary: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
