use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates an operation's precondition.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// An exhaustive enumeration would exceed the configured guard.
    #[error("feasibility error: {what} needs 2^{needed} items, guard allows 2^{limit}")]
    Feasibility {
        what: &'static str,
        needed: u32,
        limit: u32,
    },
    /// Reading or writing an external file failed.
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

/// Limits on exhaustive enumeration.
///
/// `max_dim` bounds codebook loops (2^dim codewords); `max_noise_bits` bounds
/// sums over all noise patterns (2^n patterns).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Guards {
    pub max_dim: u32,
    pub max_noise_bits: u32,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            max_dim: 24,
            max_noise_bits: 16,
        }
    }
}

impl Guards {
    /// Environment variable overriding `max_dim`.
    pub const ENV_DIM: &'static str = "RMBOOST_GUARD_DIM";

    /// Defaults, with `max_dim` taken from `RMBOOST_GUARD_DIM` when set.
    pub fn from_env() -> Result<Self> {
        let mut g = Guards::default();
        if let Ok(v) = std::env::var(Self::ENV_DIM) {
            g.max_dim = v
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("{}={v:?} is not an integer", Self::ENV_DIM)))?;
        }
        Ok(g)
    }

    pub fn check_dim(&self, what: &'static str, dim: u32) -> Result<()> {
        if dim > self.max_dim {
            return Err(Error::Feasibility {
                what,
                needed: dim,
                limit: self.max_dim,
            });
        }
        Ok(())
    }

    pub fn check_noise(&self, what: &'static str, bits: u32) -> Result<()> {
        if bits > self.max_noise_bits {
            return Err(Error::Feasibility {
                what,
                needed: bits,
                limit: self.max_noise_bits,
            });
        }
        Ok(())
    }
}
