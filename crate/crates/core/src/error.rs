use std::path::PathBuf;

use thiserror::Error;

use crate::table_env::OpKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid table spec: {0}")]
    TableSpec(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("no applicable cells for {0:?}: {1}")]
    NotApplicable(OpKind, String),

    #[error("shortcut cue cannot be realized for {0:?} on this table")]
    ShortcutUnrealizable(OpKind),

    #[error("cell (row {row}, col {col}) is out of bounds for a {n_rows}x{n_cols} table")]
    CellOutOfBounds {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("operation {op} applied to non-numeric cell (row {row}, col {col})")]
    NonNumeric { op: &'static str, row: usize, col: usize },

    #[error("arithmetic overflow")]
    Overflow,

    #[error("invalid perturbation: {0}")]
    Perturbation(String),

    #[error("invalid reward config: {0}")]
    RewardConfig(String),

    #[error("invalid optimizer config: {0}")]
    OptimizerConfig(String),

    #[error("invalid group: {0}")]
    Group(String),

    #[error("policy error: {0}")]
    Policy(String),

    #[error("illegal action {0} in current state")]
    IllegalAction(String),

    #[error("feature spec mismatch: expected {expected}, found {found}")]
    FeatureSpecMismatch { expected: String, found: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("invalid run config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Validation failures (bad specs, configs, arguments) as opposed to
    /// runtime failures. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::TableSpec(_)
                | Error::RewardConfig(_)
                | Error::OptimizerConfig(_)
                | Error::Config(_)
                | Error::Perturbation(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
