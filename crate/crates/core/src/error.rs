use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the estimators and their supporting machinery.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("sample coordinate {value} at row {row}, column {column} lies outside [0,1]")]
    OutOfUnitCube { row: usize, column: usize, value: f64 },

    #[error("query point {point:?} lies outside the unit cube")]
    QueryOutsideCube { point: Vec<f64> },

    #[error("index {index} out of range for {len} sample points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("grid of {requested} points exceeds the size guard of {limit}")]
    GridTooLarge { requested: u128, limit: u128 },

    #[error("non-finite integrand value {value} at grid point {point:?} (density values {densities:?})")]
    NonFinite {
        value: f64,
        point: Vec<f64>,
        densities: Vec<f64>,
    },

    #[error("kernel construction failed: {0}")]
    KernelConstruction(String),

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),

    #[error("unbounded derivative: {0}")]
    UnboundedDerivative(String),

    #[error("numerical oracle did not converge: {0}")]
    OracleResolution(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
