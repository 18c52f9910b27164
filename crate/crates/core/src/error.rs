use thiserror::Error;

/// Errors produced by the simulator and its front ends.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is invalid or inconsistent with another one.
    #[error("configuration error: {0}")]
    Config(String),

    /// A run produced no conclusive slots, so the QBER is undefined.
    #[error("no data: {0}")]
    NoData(String),

    /// The requested (profile, preprocessing, transmission) has no tabulated estimate.
    #[error("unsupported scenario: no tabulated I_est for profile {profile:?}, y = {y}, T = {t}")]
    UnsupportedScenario { profile: String, y: f64, t: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
