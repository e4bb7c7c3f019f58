use std::io;
use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ffscale_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub kind: &'a str,
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) if e.is_infeasible() => "infeasible",
            CliError::Core(e) if e.is_numerical() => "numerical",
            CliError::Core(_) => "config",
            CliError::Io { .. } | CliError::Csv(_) => "io",
        }
    }

    /// 2 config, 3 infeasible schedule, 4 numerical failure, 1 output IO.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => 2,
            "infeasible" => 3,
            "numerical" => 4,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport<'static> {
        ErrorReport {
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        }
    }
}
