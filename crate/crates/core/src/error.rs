use thiserror::Error;

/// Errors raised by the library and the command-line front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Inputs are valid but the requested quantity does not exist there.
    #[error("outside model domain: {0}")]
    OutOfDomain(String),

    /// The damping exponent vanishes, so no bound on the collapse strength follows.
    #[error("unbounded: {0}")]
    Unbounded(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("root not bracketed on [{lo:e}, {hi:e}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// Partially overlapping spheres: the point-mass cross term no longer applies.
    #[error("overlapping mass distributions (separation {separation:e} < {radii:e})")]
    Overlap { separation: f64, radii: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
