use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data (track files, preset files).
    #[error("format error{}: {message}", line.map(|l| format!(" at row {l}")).unwrap_or_default())]
    Format { line: Option<usize>, message: String },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e}) on [{a}, {b}]")]
    Accuracy {
        requested: f64,
        achieved: f64,
        a: f64,
        b: f64,
    },

    /// A solver produced a non-finite value.
    #[error("solution diverged at interval {interval}, step {step}")]
    Divergence { interval: usize, step: usize },

    /// The implicit step solver failed to converge.
    #[error("implicit step failed at interval {interval}, step {step} (last residual {residual:e})")]
    Solver {
        interval: usize,
        step: usize,
        residual: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Accuracy { .. } | Error::Divergence { .. } | Error::Solver { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
