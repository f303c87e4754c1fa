use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error in {file} line {line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    #[error("invalid culture id {0:?}")]
    InvalidCulture(String),
    #[error("duplicate culture {0} in registry")]
    DuplicateCulture(String),
    #[error("unknown culture {0}")]
    UnknownCulture(String),
    #[error("unknown chapter label {0:?}")]
    UnknownChapter(String),
    #[error("duplicate concept key {0:?}")]
    DuplicateConcept(String),
    #[error("no cleaned records for culture {culture} and cue {cue:?}")]
    EmptyNorms { culture: String, cue: String },
    #[error("culture {culture} has no norms for cue {cue:?}")]
    MissingCultureForCue { culture: String, cue: String },

    #[error("truth list is empty")]
    EmptyTruth,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("duplicate predicted word {0:?}")]
    DuplicatePrediction(String),
    #[error("prediction scores are not non-increasing at position {0}")]
    UnsortedScores(usize),
    #[error("prediction has {words} words but {scores} scores")]
    ScoreLengthMismatch { words: usize, scores: usize },

    #[error("vocabulary budget {max_size} is smaller than the alphabet ({alphabet} characters)")]
    VocabTooSmall { max_size: usize, alphabet: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("template {mode} requires a value for {slot}")]
    MissingSlot { mode: &'static str, slot: &'static str },
    #[error("sequence of {needed} tokens exceeds context {context}; need context >= {needed}")]
    ContextOverflow { needed: usize, context: usize },
    #[error("window size must be at least 1")]
    ZeroWindow,
    #[error("token id {id} out of range for vocabulary of {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("registry mismatch at index {index}: expected {expected}, found {found}")]
    RegistryMismatch {
        index: usize,
        expected: String,
        found: String,
    },

    #[error("candidate of {tokens} sub-tokens exceeds window {window}")]
    CandidateExceedsWindow { tokens: usize, window: usize },
    #[error("candidate has no sub-tokens")]
    EmptyCandidate,
    #[error("candidate pool for cue {0:?} is empty")]
    EmptyPool(String),
    #[error("non-finite loss encountered: {0}")]
    NonFiniteLoss(String),
    #[error("every training example was rejected")]
    AllExamplesRejected,
    #[error("probes must be at least 1")]
    NoProbes,
    #[error(
        "stale artifact {artifact}: config hash {found} differs from current {expected} (use --force to override)"
    )]
    StaleArtifact {
        artifact: String,
        expected: String,
        found: String,
    },
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
