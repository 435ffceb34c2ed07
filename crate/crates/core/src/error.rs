use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("q must satisfy 0 < q < 1, got {0}")]
    InvalidQ(f64),

    #[error("circle grid needs at least 4 nodes, got {0}")]
    GridTooSmall(usize),

    #[error("series did not converge within {terms} terms (last term magnitude {last_term:e})")]
    NonConvergent { terms: usize, last_term: f64 },

    #[error("denominator vanishes at term {index}: factor 1 - {param} q^{index}")]
    PoleInDenominator { param: Complex64, index: usize },

    #[error("weight underflows at z = {z} (|w| = {magnitude:e})")]
    WeightUnderflow { z: Complex64, magnitude: f64 },

    #[error("unbalanced parameters: A B C q^(1-n) = {lhs}, D E F = {rhs}")]
    UnbalancedParameters { lhs: Complex64, rhs: Complex64 },

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("eigenpair rejected: {0}")]
    EigenpairInvalid(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
