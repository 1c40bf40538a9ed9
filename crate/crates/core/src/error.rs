use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilmError {
    /// An input lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller asked for something that makes no sense for the given setup.
    #[error("usage error: {0}")]
    Usage(String),

    /// A solver produced non-finite values, failed to converge, or hit a
    /// singular system.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The film thinned below the configured floor.
    #[error("film rupture: h = {h:.3e} below h_min = {h_min:.3e} at x index {index}, t = {t}")]
    Rupture {
        h: f64,
        h_min: f64,
        index: usize,
        t: f64,
    },

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for FilmError {
    fn from(e: std::io::Error) -> Self {
        FilmError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FilmError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FilmError::Domain(msg.into()))
}
