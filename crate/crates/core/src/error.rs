use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("partition does not cover [0,1] disjointly: {0}")]
    BadPartition(String),

    #[error("not a contraction: factor {name} = {value} >= 1")]
    NotContraction { name: &'static str, value: f64 },

    #[error("no convergence after {iterations} iterations (error bound {bound:e}, target {tol:e})")]
    MaxIterations {
        iterations: usize,
        bound: f64,
        tol: f64,
    },

    #[error("measure has nonzero total mass {0:e}")]
    NonzeroMass(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("set-transition graph exceeds {0} nodes")]
    GraphTooLarge(usize),

    #[error("iterate has {0} atoms and pieces, above the size limit")]
    MeasureTooLarge(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
