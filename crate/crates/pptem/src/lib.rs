//! Experiment drivers, file formats and the command-line front end for
//! [`pptem_core`].
//!
//! * [`experiments`]: strong-error studies, positivity tables, moment and
//!   increment diagnostics;
//! * [`config`]: the key/value run configuration;
//! * [`output`]: CSV and plot-data writers;
//! * [`cli`]: argument parsing and subcommand dispatch.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

/// Errors of the experiment layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid input to the numerical core.
    #[error(transparent)]
    Core(#[from] pptem_core::Error),
    /// Inconsistent or malformed settings.
    #[error("{0}")]
    Config(String),
    /// A config file line could not be understood.
    #[error("{path}:{line}: {message}")]
    ConfigLine {
        /// File being parsed.
        path: String,
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        message: String,
    },
    /// Reading or writing a file failed.
    #[error("{path}: {source}")]
    Io {
        /// File involved.
        path: PathBuf,
        /// Underlying error.
        source: std::io::Error,
    },
    /// A path diverged in a mode where that is fatal.
    #[error("iterate diverged at step {step}")]
    Diverged {
        /// Step at which it happened.
        step: usize,
    },
}

impl Error {
    /// Process exit status for this error: `2` for configuration problems,
    /// `3` for fatal divergence and `1` for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(_) | Self::Config(_) | Self::ConfigLine { .. } => 2,
            Self::Diverged { .. } => 3,
            Self::Io { .. } => 1,
        }
    }
}
