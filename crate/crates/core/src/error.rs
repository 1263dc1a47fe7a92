use thiserror::Error;

/// Errors produced by the solvers and their configuration layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("temperature {value} K outside property range [{min}, {max}] K")]
    PropertyRange { value: f64, min: f64, max: f64 },

    #[error("state inversion failed: {0}")]
    Inversion(String),

    #[error("linear system is rank deficient: {0}")]
    RankDeficient(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("degenerate element {element}: {reason}")]
    DegenerateElement { element: usize, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {last:.3e})")]
    NotConverged {
        what: String,
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Geometry(_) | Error::Io(_) => 2,
            Error::NotConverged { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
