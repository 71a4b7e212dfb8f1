use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected length {expected}, got {actual}")]
    ShapeMismatch { context: &'static str, expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("normalized energy requires a gain direction v with nonzero norm")]
    ZeroNormGain,

    #[error("token {token} outside vocabulary of size {vocab}")]
    TokenOutOfRange { token: usize, vocab: usize },

    #[error("training diverged at step {step}: loss is no longer finite")]
    Diverged { step: usize },

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }
}
