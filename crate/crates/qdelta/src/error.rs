use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} exceeds bound {limit}")]
    BoundExceeded { what: &'static str, limit: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate quadratic form (determinant 0)")]
    Degenerate,
    #[error("cross coefficient {name} = {value} is odd; only classically integral forms are supported")]
    OddCrossTerm { name: &'static str, value: i64 },
    #[error("integer overflow while evaluating {0}")]
    Overflow(&'static str),
    #[error("density at p = {p} did not stabilise within p^k <= {limit}")]
    NoStabilization { p: u64, limit: u64 },
    #[error("config: {0}")]
    Config(String),
    #[error("config: missing field `{0}`")]
    MissingField(String),
    #[error("numerical: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
