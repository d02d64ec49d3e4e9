use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown token `{token}` at site {site}")]
    UnknownToken { site: usize, token: String },

    #[error(
        "no output satisfies the constraints{context}; try a larger cluster size or a smaller \
         strengthening level"
    )]
    Infeasible { context: String },

    #[error("solver exceeded its conflict budget")]
    SolverTimeout,

    #[error(
        "witnessed record is incompatible with this cohort: {0}"
    )]
    ReverseIncompatible(String),

    #[error("instance too large for exact enumeration: {0}")]
    DeskScaleExceeded(String),

    #[error("sampling budget exhausted after {attempts} attempts ({found} of {wanted} found)")]
    SamplingBudget {
        attempts: usize,
        found: usize,
        wanted: usize,
    },

    #[error("eigensolver failed to converge within the iteration budget")]
    NoConvergence,

    #[error("cannot write {format} output: {reason}")]
    Unwritable { format: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn infeasible(context: impl Into<String>) -> Error {
        let context = context.into();
        let context = if context.is_empty() {
            context
        } else {
            format!(" ({context})")
        };
        Error::Infeasible { context }
    }
}
