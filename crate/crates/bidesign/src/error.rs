//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structurally invalid input: mismatched lengths, non-binary treatment
    /// values, probabilities outside [0, 1], unknown unit ids, and the like.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A file could not be parsed; points at the offending line.
    #[error("parse error in {file} at line {line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    /// A neighbourhood enumeration would exceed the configured cap.
    #[error("enumeration over {needed} units exceeds cap of {cap}")]
    CapExceeded { needed: usize, cap: usize },

    /// The design's assignment support is too large to expand exhaustively.
    #[error("assignment support of size {size} exceeds cap of {cap}")]
    SupportCapExceeded { size: String, cap: usize },

    /// Positivity screening left no usable outcome units.
    #[error("no outcome units satisfy positivity for estimand {estimand}")]
    EmptyRetainedSet { estimand: String },

    /// A test statistic is constant under the design, so no test exists.
    #[error("degenerate test statistic: {0}")]
    DegenerateStatistic(String),

    /// A target-exposure policy has an empty level set at some unit.
    #[error("no local assignment for outcome unit {unit} attains target exposure {target}")]
    EmptyLevelSet { unit: usize, target: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line tool: 2 for input errors, 3
    /// when the requested statistical operation is infeasible on the data,
    /// 4 when an enumeration cap is exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) | Error::InvalidInput(_) => 2,
            Error::EmptyRetainedSet { .. }
            | Error::DegenerateStatistic(_)
            | Error::EmptyLevelSet { .. } => 3,
            Error::CapExceeded { .. } | Error::SupportCapExceeded { .. } => 4,
        }
    }
}
