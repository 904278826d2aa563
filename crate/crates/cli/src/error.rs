use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("shape mismatch in {field}: expected {expected}, got {got}")]
    ShapeMismatch {
        field: String,
        expected: usize,
        got: usize,
    },

    #[error("unknown problem kind {0:?}")]
    UnknownKind(String),

    #[error("invalid problem: {0}")]
    Build(rdcc_core::Error),

    #[error("{0}")]
    Infeasible(rdcc_core::Error),

    #[error("solver failed: {0}")]
    Solver(rdcc_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} validation check(s) failed")]
    ValidationFailed(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Classifies an error raised by `solve`.
    pub fn from_solve(err: rdcc_core::Error) -> Self {
        match err {
            rdcc_core::Error::InfeasibleLoss { .. } => Self::Infeasible(err),
            rdcc_core::Error::InvalidOptions(_) => Self::Build(err),
            _ => Self::Solver(err),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ValidationFailed(_) => 1,
            Self::Parse { .. } | Self::ShapeMismatch { .. } | Self::UnknownKind(_) | Self::Build(_) => 2,
            Self::Infeasible(_) => 3,
            Self::Solver(_) => 4,
            Self::Io { .. } => 5,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Parse { .. } => "ParseError",
            Self::ShapeMismatch { .. } => "ShapeMismatch",
            Self::UnknownKind(_) => "UnknownKind",
            Self::Build(_) => "InvalidProblem",
            Self::Infeasible(_) => "InfeasibleLoss",
            Self::Solver(_) => "SolverFailure",
            Self::Io { .. } => "IoError",
            Self::ValidationFailed(_) => "ValidationFailed",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        let mut record = json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        match self {
            Self::Parse { line, .. } => record["line"] = json!(line),
            Self::ShapeMismatch {
                field, expected, got, ..
            } => {
                record["field"] = json!(field);
                record["expected"] = json!(expected);
                record["got"] = json!(got);
            }
            _ => {}
        }
        record.to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;
