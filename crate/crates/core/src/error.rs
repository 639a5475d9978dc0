use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{value} is outside the supported range {range}")]
    OutOfRange { value: String, range: String },

    #[error("{p} is not invertible modulo {q}")]
    NotCoprime { p: u64, q: u64 },

    #[error("{0} is not a prime congruent to 1 mod 4")]
    NotOneModFour(u64),

    #[error("{x0}^2 + 1 is not divisible by {modulus}")]
    NotARoot { x0: u64, modulus: u64 },

    #[error("x^2 = -1 has no solution modulo {0}")]
    Vanishing(u64),

    #[error("{numer}/{denom} is not a reduced fraction in the required range")]
    NotReduced { numer: i64, denom: i64 },

    #[error("T0 must exceed 1 (got {0})")]
    CoreHeight(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("table of {requested} entries exceeds the memory budget of {budget_bytes} bytes")]
    MemoryBudget { requested: u64, budget_bytes: u64 },

    #[error("{what} of {value} exceeds the limit {limit}")]
    Limit { what: String, value: u64, limit: u64 },

    #[error("reduction of {point} did not converge within {cap} steps")]
    ReductionCap { point: String, cap: usize },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::NotReduced { .. } => 2,
            Error::OutOfRange { .. }
            | Error::NotCoprime { .. }
            | Error::NotOneModFour(_)
            | Error::NotARoot { .. }
            | Error::Vanishing(_)
            | Error::CoreHeight(_)
            | Error::Precondition(_) => 3,
            Error::MemoryBudget { .. } | Error::Limit { .. } | Error::ReductionCap { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
