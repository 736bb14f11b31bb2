//! CLI error type and exit-code mapping.

/// Documented process exit codes.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    /// Malformed input file or configuration.
    pub const MALFORMED: i32 = 2;
    /// A numeric routine failed to converge.
    pub const NO_CONVERGENCE: i32 = 3;
    /// Filesystem failure.
    pub const IO: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}: malformed input: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("invalid arguments: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] sepsim_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Malformed { .. } | CliError::Invalid(_) => exit_code::MALFORMED,
            CliError::Io { .. } => exit_code::IO,
            CliError::Core(e) => match e {
                sepsim_core::Error::NoConvergence(_) => exit_code::NO_CONVERGENCE,
                _ => exit_code::MALFORMED,
            },
        }
    }
}
