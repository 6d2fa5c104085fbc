//! Crate-wide error type. Variants map onto the CLI exit code contract:
//! 1 usage/config, 2 data, 3 point-in-time violation, 4 numerical failure.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameter value.
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or insufficient input data.
    #[error("data error: {0}")]
    Data(String),

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Zero-variance or otherwise uninformative input.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("point-in-time violation: {0}")]
    Pit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Wraps an error with the pipeline phase it occurred in.
    #[error("{phase} phase failed: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_phase(self, phase: &'static str) -> Error {
        Error::Phase {
            phase,
            source: Box::new(self),
        }
    }

    /// Exit code for the CLI: 1 usage/config, 2 data, 3 PIT, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io { .. } | Error::Data(_) | Error::TooShort { .. } => 2,
            Error::Pit(_) => 3,
            Error::LengthMismatch { .. } | Error::Degenerate(_) | Error::Numerical(_) => 4,
            Error::Phase { source, .. } => source.exit_code(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::Config("x".into()).exit_code(), 1);
        assert_eq!(Error::Data("x".into()).exit_code(), 2);
        assert_eq!(Error::Pit("x".into()).exit_code(), 3);
        assert_eq!(Error::Degenerate("x".into()).exit_code(), 4);
        let wrapped = Error::Pit("overlap".into()).in_phase("backtest");
        assert_eq!(wrapped.exit_code(), 3);
    }
}
