use thiserror::Error;

/// Errors produced by the model evaluations, solvers and scenario driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An exponent argument left the admissible window.
    #[error("exponent argument {value:.6e} exceeds guard {guard} ({context})")]
    Range {
        value: f64,
        guard: f64,
        context: &'static str,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("blow-up at t = {t:.6}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e}){}", at_time.map(|t| format!(" at t = {t:.6}")).unwrap_or_default())]
    NonConvergence {
        iterations: usize,
        residual: f64,
        at_time: Option<f64>,
        /// Best iterate reached before giving up, when one exists.
        best: Option<Box<crate::metastable::EquilibriumCertificate>>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code for the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) => 2,
            Error::Range { .. } | Error::BlowUp { .. } => 3,
            Error::NonConvergence { .. } => 4,
            Error::Io { .. } => 1,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Config(_) => "config",
            Error::Range { .. } => "range",
            Error::BlowUp { .. } => "blow_up",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Attaches a time stamp to a non-convergence error raised inside a time loop.
    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            Error::NonConvergence {
                iterations,
                residual,
                best,
                ..
            } => Error::NonConvergence {
                iterations,
                residual,
                at_time: Some(t),
                best,
            },
            other => other,
        }
    }
}
