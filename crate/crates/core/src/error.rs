use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A walker coordinate left the finite reals, usually because the step
    /// is too coarse for the interaction width.
    #[error("walker became non-finite in trajectory {trajectory} at step {step}")]
    NonFiniteWalker { trajectory: u64, step: u64 },

    /// The trajectory weights collapsed onto too few trajectories for the
    /// estimate to be trusted.
    #[error(
        "degenerate weights: effective sample size {effective_sample_size:.3} is below {threshold}"
    )]
    DegenerateWeights {
        effective_sample_size: f64,
        threshold: f64,
    },

    #[error("observable needs at least 2 particles, got {0}")]
    TooFewParticles(usize),

    #[error("estimator needs at least 2 trajectories, got {0}")]
    TooFewTrajectories(usize),

    #[error("window [{t_start}, {t_end}] contains {found} recorded times, need at least {needed}")]
    EmptyWindow {
        t_start: f64,
        t_end: f64,
        found: usize,
        needed: usize,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid value for {key}: {message}")]
    Range { key: String, message: String },

    #[error("grid binding energy did not converge: last relative shift {relative_shift:.3e}")]
    GridNotConverged { relative_shift: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("regularization check failed: {0}")]
    RegularizationFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn range(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Range {
            key: key.into(),
            message: message.into(),
        }
    }
}
