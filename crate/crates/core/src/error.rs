use thiserror::Error;

/// Errors raised by the library. Every variant maps onto one of the CLI exit
/// classes through [`Error::class`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates the precondition of the requested operation.
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    /// A configured resource limit would be exceeded.
    #[error("{what}: requested {requested} exceeds the budget of {limit}")]
    Budget {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    /// The polynomial is reducible over the rationals.
    #[error("polynomial {poly} is reducible over Q ({witness})")]
    Reducible { poly: String, witness: String },

    /// The irreducibility test could not reach a verdict inside its limits.
    #[error("cannot certify irreducibility of {poly}: {reason}")]
    Undecided { poly: String, reason: String },

    /// A query outside the tabulated domain of the Dickman function.
    #[error("argument {arg} is outside the tabulated range (0, {max}]")]
    OutOfTable { arg: f64, max: f64 },

    /// Box intervals do not satisfy the rectangle-formula hypothesis.
    #[error("rectangle formula hypothesis violated: {0}")]
    Hypothesis(String),

    /// The prime window of a sieve experiment contains no primes.
    #[error("empty sieve window: no primes p > {z0} with x^{eps} < p < x^{delta0} for x = {x}")]
    EmptyWindow { x: u64, eps: f64, delta0: f64, z0: f64 },

    #[error("empty sample")]
    EmptySample,

    /// Malformed prime-table cache bytes.
    #[error("prime cache: {0}")]
    Cache(String),

    /// An internal consistency check failed.
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Resource,
    Internal,
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Budget { .. } => ErrorClass::Resource,
            Error::Internal(_) => ErrorClass::Internal,
            _ => ErrorClass::Validation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
