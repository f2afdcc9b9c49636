use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fqcorr::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 when an enumeration or sieve budget was exceeded, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(fqcorr::Error::BudgetExceeded { .. }) => 2,
            _ => 1,
        }
    }
}
