use std::path::PathBuf;

use fpqe_core::clustering::ClusterError;
use fpqe_core::eval::EvalError;
use fpqe_core::features::FeatureError;
use fpqe_core::gabor::GaborError;
use fpqe_core::imgcore::ImgError;
use fpqe_core::stats::StatsError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no input images in {0}")]
    NoInput(PathBuf),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Matcher(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CliError {
    pub fn input(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{context}: {err}"))
    }

    /// Prefixes input errors with `context`; other classes pass through unchanged.
    pub fn context(self, context: impl std::fmt::Display) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{context}: {m}")),
            other => other,
        }
    }

    /// Process exit status: 2 input, 3 external matcher, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NoInput(_) | CliError::Input(_) => 2,
            CliError::Matcher(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::NoInput(_) => "no_input",
            CliError::Input(_) => "input",
            CliError::Matcher(_) => "matcher",
            CliError::Internal(_) => "internal",
        }
    }

    /// Single-line JSON object for machine consumers of stderr.
    pub fn json_line(&self) -> String {
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("io: {e}"))
    }
}

impl From<ImgError> for CliError {
    fn from(e: ImgError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GaborError> for CliError {
    fn from(e: GaborError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::LengthMismatch { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::LengthMismatch { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Spawn(_) | EvalError::ParseError { .. } => CliError::Matcher(e.to_string()),
            EvalError::Pool(_) => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}
