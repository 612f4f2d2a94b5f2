use thiserror::Error;
use trajbell::bell::BellError;
use trajbell::dynamics::DynamicsError;
use trajbell::fock::FockError;
use trajbell::hv::HvError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_VIOLATION: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: configuration, flags, files.
    #[error("{0}")]
    Config(String),
    /// A numerical or statistical check did not hold.
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Check(_) => EXIT_CHECK_FAILED,
        }
    }
}

impl From<BellError> for CliError {
    fn from(e: BellError) -> Self {
        match e {
            BellError::Accuracy(_) | BellError::Truncation { .. } | BellError::Counterexample(_) => {
                CliError::Check(e.to_string())
            }
            BellError::Fock(FockError::NumericalAccuracy(_) | FockError::CrossValidation { .. })
            | BellError::Dynamics(DynamicsError::Accuracy(_)) => CliError::Check(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<HvError> for CliError {
    fn from(e: HvError) -> Self {
        CliError::Check(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
