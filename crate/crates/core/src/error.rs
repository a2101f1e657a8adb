use thiserror::Error;

/// Errors shared by every module in this crate.
///
/// `Config` marks problems with how a computation was set up (bad model
/// spec, mismatched mode sets, malformed JSON). The other variants mark
/// numeric domain failures: parameters outside the geometry's validity
/// range, grazing-incidence degeneracies, or states with no norm left.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("normalization failure: {0}")]
    Normalization(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn singular(msg: impl Into<String>) -> Self {
        Error::SingularGeometry(msg.into())
    }

    pub fn normalization(msg: impl Into<String>) -> Self {
        Error::Normalization(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
