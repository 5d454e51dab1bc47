use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum CbfError {
    /// Fields on different grids, wrong component counts or array lengths.
    #[error("structural mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Advective time-step restriction violated.
    #[error("CFL violation: dt = {dt:.3e} exceeds the advective limit; use dt <= {suggested:.3e}")]
    Cfl { dt: f64, suggested: f64 },

    /// An iterative solve failed to reach its tolerance.
    #[error("{context} did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// Wraps a lower-level failure with the operation that triggered it.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<CbfError>,
    },
}

impl CbfError {
    pub fn context(self, context: impl Into<String>) -> Self {
        CbfError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, CbfError>;

/// Attach context to the error branch of a `Result`.
pub trait ResultExt<T> {
    fn with_context<F: FnOnce() -> String>(self, f: F) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn with_context<F: FnOnce() -> String>(self, f: F) -> Result<T> {
        self.map_err(|e| e.context(f()))
    }
}
