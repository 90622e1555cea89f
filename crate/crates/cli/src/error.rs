use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("tolerance breached: {0}")]
    Tolerance(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numeric(_) | CliError::Io { .. } => 2,
            CliError::Tolerance(_) => 3,
        }
    }
}

impl From<fptfilter::Error> for CliError {
    fn from(e: fptfilter::Error) -> Self {
        match e {
            fptfilter::Error::Domain(_) => CliError::Validation(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}
