use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("cholesky factorization failed after adding jitter {jitter:e}")]
    Cholesky { jitter: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("total particle degeneracy: every weight is zero")]
    Degenerate,

    #[error("stage {stage}, particle {particle}: {source}")]
    AtParticle {
        stage: usize,
        particle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all run-length messages underflowed at t={t} (max log joint {max_log_joint})")]
    MessageUnderflow { t: usize, max_log_joint: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_particle(self, stage: usize, particle: usize) -> Self {
        Error::AtParticle {
            stage,
            particle,
            source: Box::new(self),
        }
    }

    /// True for errors caused by the user's configuration or input files
    /// rather than by numerical breakdown.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse { .. }
                | Error::Dimension { .. }
                | Error::InvalidArgument(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
