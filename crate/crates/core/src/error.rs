use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or combination. Carries a message naming
    /// the offending field and the constraint it violates.
    #[error("configuration error: {0}")]
    Config(String),

    /// A persisted Q-table could not be parsed or does not match the
    /// dimensions implied by the active configuration.
    #[error("q-table error: {0}")]
    QTable(String),

    /// Underlying filesystem failure while reading or writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn qtable(msg: impl Into<String>) -> Self {
        Error::QTable(msg.into())
    }
}
