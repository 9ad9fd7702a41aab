use std::fmt;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input violated a precondition (non-finite entries, bad parameter, ...).
    InvalidInput(String),
    /// Matrix dimensions do not agree with what the operation requires.
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// A rank budget outside `1..=min(rows, cols)`.
    InvalidRank { rank: usize, max: usize },
    /// A solver configuration that fails validation.
    Config(String),
    /// An iterate became non-finite; reports the outer iteration where it happened.
    Divergence { iteration: usize },
    /// Barzilai-Borwein step from two identical snapshots.
    DegenerateStep,
    /// A closed-form constant was requested outside its domain.
    Domain(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::InvalidRank { rank, max } => {
                write!(f, "rank budget {rank} outside 1..={max}")
            }
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Divergence { iteration } => {
                write!(f, "iterate became non-finite at outer iteration {iteration}")
            }
            Error::DegenerateStep => write!(f, "identical snapshots give a degenerate step"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
