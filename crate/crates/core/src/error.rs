use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cannot trace out everything")]
    EmptyKeepSet,

    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("outcome has zero probability (p = {0:e})")]
    ZeroProbability(f64),

    #[error("operator is not a projector (max |P^2 - P| = {0:e})")]
    NotAProjector(f64),

    #[error("operator is not unitary (max |U U^dagger - I| = {0:e})")]
    NotUnitary(f64),

    #[error("operator is not Hermitian (max |M - M^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Fock truncation overflow (leaked population {0:e}); increase n_max")]
    TruncationOverflow(f64),

    #[error("optimization did not converge after {iterations} iterations (best value {best})")]
    NoConvergence { iterations: usize, best: f64 },

    #[error("inconsistent witness spec: {0}")]
    InconsistentWitness(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
