use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty mesh: {0}")]
    EmptyMesh(&'static str),
    #[error("mesh is not watertight and consistently oriented; signed distances are undefined (use unsigned sampling)")]
    NotWatertight,
    #[error("linear solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },
    #[error("watchdog abort at iteration {iteration}: {reason}")]
    Watchdog { iteration: usize, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("oracle failed: {0}")]
    Oracle(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

impl Error {
    /// Numerical failures, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Watchdog { .. } | Error::SolverDiverged { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
