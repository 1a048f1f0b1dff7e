use thiserror::Error;

/// Errors surfaced by the modeling and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("no crossover between schemes in [{lo}, {hi}] dB")]
    NoCrossover { lo: f64, hi: f64 },

    #[error("scheme mismatch: expected {expected}, got {got}")]
    SchemeMismatch { expected: &'static str, got: &'static str },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
