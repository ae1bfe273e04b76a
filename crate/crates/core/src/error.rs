use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The ODE integrator could not reach the requested tolerance.
    #[error("integration failed at eta = {eta:e}: {reason}")]
    Integration { eta: f64, reason: String },

    /// The Gaussian state lost normalizability (Re Omega <= 0).
    #[error("non-normalizable state at eta = {eta:e}: Re Omega = {re_omega:e}")]
    NonNormalizable { eta: f64, re_omega: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("quadrature did not converge for {what}: estimated error {error:e}")]
    Quadrature { what: String, error: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing input file {}", .0.display())]
    MissingInput(PathBuf),

    #[error("malformed input {}: {reason}", path.display())]
    MalformedInput { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable kind tag, used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Integration { .. } => "integration",
            Error::NonNormalizable { .. } => "non_normalizable",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Quadrature { .. } => "quadrature",
            Error::Config(_) => "config",
            Error::MissingInput(_) => "missing_input",
            Error::MalformedInput { .. } => "malformed_input",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code: 2 for configuration and input problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::MissingInput(_) | Error::MalformedInput { .. } => 2,
            Error::Domain(_)
            | Error::Integration { .. }
            | Error::NonNormalizable { .. }
            | Error::InsufficientData(_)
            | Error::Quadrature { .. } => 3,
            Error::Io(_) => 1,
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
