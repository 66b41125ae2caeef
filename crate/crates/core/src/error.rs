use thiserror::Error;

/// Errors raised by lattice construction, summation and the optimisers built on top.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("basis matrix is singular (|det| = {det:e})")]
    SingularBasis { det: f64 },

    #[error("basis must be a non-empty square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cutoff too large: about {estimated} vectors exceed the budget of {budget}")]
    CutoffTooLarge { estimated: f64, budget: usize },

    #[error("lattice sum is not absolutely convergent: {0}")]
    NotSummable(String),

    #[error("tolerance {tol:e} not reachable within the vector budget")]
    BudgetExceeded { tol: f64 },

    #[error("ratio sign violated at {location}: numerator {numerator:e}, denominator {denominator:e}")]
    SignError {
        location: String,
        numerator: f64,
        denominator: f64,
    },

    #[error("refinement did not converge: {0}")]
    NotConverged(String),

    #[error("constraint tangent space is trivial; the lattice is rigid in its class")]
    DegenerateTangent,

    #[error("no admissible seed for the 3D family")]
    NoAdmissibleSeed,

    #[error("point is not admissible: {0}")]
    Inadmissible(String),
}

impl Error {
    /// True for failures of a numerical procedure rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CutoffTooLarge { .. }
                | Error::BudgetExceeded { .. }
                | Error::NotConverged(_)
                | Error::SignError { .. }
                | Error::DegenerateTangent
                | Error::NoAdmissibleSeed
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
