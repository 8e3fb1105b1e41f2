use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("negative power of zero")]
    NegativePowerOfZero,
    #[error("slot {slot} out of range for {dim} coordinates")]
    SlotOutOfRange { slot: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular system: no usable pivot in column {pivot}")]
    SingularSystem { pivot: usize },
    #[error("singular jacobian: no usable pivot in column {pivot}")]
    SingularJacobian { pivot: usize },
    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("duplicate exponents in sparse basis")]
    DuplicateExponents,
    #[error("duplicate monomials in plane-curve basis")]
    DuplicateMonomials,
    #[error("({w_n}, {w_s}) are not coprime")]
    NotCoprime { w_n: u32, w_s: u32 },
    #[error("weierstrass model needs both parameters >= 2, got ({w_n}, {w_s})")]
    DegenerateWeierstrass { w_n: u32, w_s: u32 },
    #[error("derivative order {order} in row {row} annihilates a basis of size {n}")]
    OrderTooHigh { row: usize, order: u32, n: usize },
    #[error("hypothesis violated: slot {slot} fails the rank condition but carries nonzero weight")]
    HypothesisViolated { slot: usize },
    #[error("too many singular samples: {singular} of {total} draws")]
    TooManySingularSamples { singular: usize, total: usize },
    #[error("empty window")]
    EmptyWindow,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem { .. }
                | Error::SingularJacobian { .. }
                | Error::NewtonDiverged { .. }
                | Error::DivisionByZero
                | Error::NegativePowerOfZero
                | Error::TooManySingularSamples { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}
