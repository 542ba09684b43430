use thiserror::Error;

use crate::ode::OdeError;

/// Broad failure classes; the CLI maps each to a fixed exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad arguments, malformed files.
    Input,
    /// Integrator failure, singular linear system, Riccati blow-up.
    Numerical,
    /// Physically meaningless request, e.g. the `mu = -1` channel threshold.
    Physics,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate channel threshold: mu = -1 makes q = 0 and the kernel singular")]
    DegenerateThreshold,

    #[error("Riccati blow-up at eta = {eta:.6} (|S| = {norm:.3e}); try perturbing the velocity")]
    RiccatiBlowUp { eta: f64, norm: f64 },

    #[error("integrator failure: {0}")]
    Integrator(#[from] OdeError),

    #[error("singular linear system (pivot {pivot:.3e} at column {column}); likely near a pole")]
    SingularSystem { pivot: f64, column: usize },

    #[error("device {device} is forbidden for ansatz symmetry {ansatz}")]
    DeviceForbidden { device: String, ansatz: String },

    #[error("profile format: {0}")]
    Format(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) | Error::Format(_) | Error::Io(_) => ErrorClass::Input,
            Error::DegenerateThreshold | Error::DeviceForbidden { .. } => ErrorClass::Physics,
            Error::RiccatiBlowUp { .. } | Error::Integrator(_) | Error::SingularSystem { .. } => ErrorClass::Numerical,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
