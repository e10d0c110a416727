use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),

    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),

    #[error("hensel lift failed: {0}")]
    LiftFailure(String),

    #[error("eigenvalues are not distinct mod {0}")]
    NonSeparable(u64),

    #[error("conjugating matrix is not invertible")]
    SingularConjugator,

    #[error("cannot reduce from exponent {from} to exponent {to}")]
    Reduction { from: u32, to: u32 },

    #[error("matrix is not invertible: {0}")]
    NotInvertible(String),

    #[error("group exceeds the element cap of {cap}")]
    Capacity {
        cap: usize,
        checkpoint: Option<String>,
    },

    #[error("structure error: {0}")]
    Structure(String),

    #[error("not potentially lift-exceptional: {0}")]
    NotPotentiallyExceptional(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("levels are not pairwise coprime: {0}")]
    Level(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data error on line {line}: {message}")]
    Data { line: usize, message: String },

    #[error("bad reduction: p = {0} equals the level prime")]
    BadReduction(u64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
