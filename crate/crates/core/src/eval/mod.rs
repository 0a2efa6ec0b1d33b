//! FVC-protocol pair generation, matcher orchestration and equal error rate.

mod eer;
mod matcher;
mod pairs;
mod scores;

pub use eer::{compute_eer, eer_from_scores, relative_improvement, roc_curve, EerResult, RocPoint};
pub use matcher::{
    correlation_score, index_images, run_matcher, CorrelationMatcher, ExternalCommand, MatchError, MatchFailure,
    MatchRun, Matcher, PairKind,
};
pub use pairs::{generate_pairs, DatasetSpec, ImageId, Pair};
pub use scores::{read_scores, write_roc, write_scores, ScoreSet, Scored};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("dataset needs at least 2 subjects and 2 impressions, got {subjects} x {impressions}")]
    InvalidSpec { subjects: usize, impressions: usize },
    #[error("genuine and impostor score lists must both be nonempty")]
    EmptyScores,
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("baseline error rate must be positive")]
    ZeroBaseline,
    #[error("matcher template {0:?} must split into arguments containing {{a}} and {{b}}")]
    InvalidTemplate(String),
    #[error("matcher could not be started: {0}")]
    Spawn(String),
    #[error("matcher printed {output:?} for {} vs {}, expected one number", pair.probe, pair.gallery)]
    ParseError { pair: Pair, output: String },
    #[error("no image named {0} in the image directory")]
    MissingImage(String),
    #[error("image {0} appears twice: {1:?} and {2:?}")]
    DuplicateImage(String, PathBuf, PathBuf),
    #[error("score file line {line}: {reason}")]
    ScoreFile { line: u64, reason: String },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

/// Summary written by the `eval` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub eer: f64,
    pub threshold: f64,
    pub genuine_count: usize,
    pub impostor_count: usize,
    pub failures: usize,
}

impl EvalReport {
    pub fn new(result: &EerResult, scores: &ScoreSet, failures: usize) -> Self {
        Self {
            eer: result.eer,
            threshold: result.threshold,
            genuine_count: scores.genuine.len(),
            impostor_count: scores.impostor.len(),
            failures,
        }
    }
}
