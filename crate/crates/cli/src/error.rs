use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or configuration. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// The computation itself failed. Exit code 1.
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl From<twosite_core::Error> for CliError {
    fn from(e: twosite_core::Error) -> Self {
        use twosite_core::Error as E;
        match e {
            E::InvalidParameter { .. } | E::SizeLimit { .. } | E::EmptyBand { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(format!("i/o error: {e}"))
    }
}
