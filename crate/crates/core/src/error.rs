use std::path::PathBuf;

use thiserror::Error;

use crate::controller::WaveParams;
use crate::morphology::ModuleKind;

#[derive(Debug, Error, PartialEq)]
pub enum GenomeError {
    #[error("root module must be rect")]
    RootNotRect,
    #[error("servo module without controller")]
    MissingController,
    #[error("rect module cannot carry a controller")]
    UnexpectedController,
    #[error("controller parameters out of range: {0:?}")]
    ControllerOutOfRange(WaveParams),
    #[error("slot {slot} does not exist on a {kind:?} module")]
    BadSlot { kind: ModuleKind, slot: u8 },
    #[error("body has {0} modules, more than allowed")]
    TooLarge(usize),
    #[error("body is deeper than allowed")]
    TooDeep,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("failed to start external evaluator `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("external evaluator I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("external evaluator timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("external evaluator closed its output")]
    Closed,
    #[error("malformed evaluator response `{line}`: {reason}")]
    Protocol { line: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("unknown individual id {0}")]
    UnknownId(u64),
    #[error("no runs supplied")]
    NoRuns,
    #[error("design matrix is rank deficient: column `{column}` is collinear with {others:?}")]
    RankDeficient { column: String, others: Vec<String> },
    #[error("need at least as many rows ({rows}) as columns ({cols})")]
    Underdetermined { rows: usize, cols: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Log {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl RunError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    /// Config problems are reported before any evaluation happens.
    pub fn is_config(&self) -> bool {
        matches!(self, RunError::Config(_))
    }
}
