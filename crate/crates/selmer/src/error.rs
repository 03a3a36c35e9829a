use thiserror::Error;

/// Everything that can go wrong between building a theta series and fitting
/// a distribution curve.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("form ({a}, {b}, {c}) is not positive definite")]
    InvalidForm { a: i64, b: i64, c: i64 },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("series bounds differ: {lhs} vs {rhs}")]
    Dimension { lhs: usize, rhs: usize },

    #[error("{n0} is not a unit modulo {modulus}")]
    InvalidClass { n0: u64, modulus: u64 },

    #[error("curve '{0}' is not in the catalog")]
    NotInCatalog(String),

    #[error("class {n0} is not a catalogued class of {curve}")]
    UnknownClass { curve: String, n0: u64 },

    #[error("{curve} class {n0}: twist n = {n} gives non-integral {what}")]
    Integrality {
        curve: String,
        n0: u64,
        n: u64,
        what: &'static str,
    },

    #[error("normalization failure: {0}")]
    Normalization(String),

    #[error("Cassels check failed: {0}")]
    Cassels(String),

    #[error("numerical routine did not converge: {0}")]
    Convergence(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("{requested} exceeds the surveyed range {available}")]
    Range { requested: u64, available: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
