use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// Sample entropy has no value when no template pair matches.
    #[error("sample entropy undefined: {matches_m} matches at length m, {matches_m1} at length m+1")]
    UndefinedEntropy { matches_m: u64, matches_m1: u64 },

    #[error("empty dataset: series of length {len} cannot supply window {window} with horizon {horizon}")]
    EmptyDataset {
        len: usize,
        window: usize,
        horizon: usize,
    },

    #[error("min-max scaler is degenerate for feature {feature} (constant value {value})")]
    DegenerateScaler { feature: usize, value: f64 },

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("invalid wolf pack: {0}")]
    InvalidPack(String),

    #[error("hyperparameter tuning failed: every one of {evaluations} evaluations diverged")]
    TuningFailed {
        evaluations: usize,
        history: Vec<crate::gwo::IterationRecord>,
    },

    #[error("station series misaligned: {0}")]
    Alignment(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: file contains no data rows")]
    EmptyFile(PathBuf),

    #[error("series unusable: {missing} of {total} slots missing")]
    UnusableSeries { missing: usize, total: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// Attach a pipeline stage name to an error.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
