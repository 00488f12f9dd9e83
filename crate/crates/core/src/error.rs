use thiserror::Error;

/// Errors raised by the analysis and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DafError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    /// A supplied sequence is shorter than the operation requires.
    #[error("length error: {what} needs {needed} samples, got {got}")]
    Length {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    /// A non-BPSK symbol was supplied where ±1 is required.
    #[error("symbol at index {index} is {value}, expected +1 or -1")]
    NotBpsk { index: usize, value: f64 },

    /// Reports produced under different configurations cannot be merged.
    #[error("cannot merge reports: {0}")]
    Merge(String),

    /// Invalid scenario or command configuration.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, DafError>;

pub(crate) fn domain(what: &'static str, value: f64) -> DafError {
    DafError::Domain { what, value }
}
