use thiserror::Error;

/// Errors produced by the scheme, path and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition on an argument was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// An invalid run configuration was detected before any compute started.
    #[error("configuration error: {0}")]
    Config(String),

    /// A one-step map produced a non-finite state. Carries the offending
    /// input state; the path driver annotates the step index.
    #[error("step error at step {step}: non-finite increment from state {state:?}")]
    Step { step: usize, state: Vec<f64> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed binary lattice dump or other serialized artifact.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
