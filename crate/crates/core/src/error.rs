use thiserror::Error;

/// Errors raised by the analysis routines and file loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range (valid: {valid})")]
    IndexOutOfRange { index: usize, valid: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (max |M - M^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("state vector is not normalized (norm = {norm})")]
    NonUnitState { norm: f64 },

    #[error("zero operator")]
    ZeroOperator,

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("POVM is not rank-one")]
    NotRankOne,

    #[error("POVM is not a verified {t}-design (max deviation {deviation:e})")]
    UnverifiedDesign { t: usize, deviation: f64 },

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("exact bias budget exceeded: needs {required} tensor visits, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("tensor entries do not share a common magnitude (spread {spread:e})")]
    NonConstantMagnitude { spread: f64 },

    #[error("eigensolver did not converge (residual {residual:e})")]
    ConvergenceFailure { residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown suite '{0}' (expected boolean, pauli, moments, design, xor or all)")]
    UnknownSuite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
