use thiserror::Error;

/// Failures that stop a suite before it reaches a verdict.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
}

impl CliError {
    /// 2 for config and I/O problems, 3 for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<fisher_hydro::Error> for CliError {
    fn from(e: fisher_hydro::Error) -> Self {
        use fisher_hydro::Error as E;
        match e {
            E::NonFinite { .. } | E::EmptyMask => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
