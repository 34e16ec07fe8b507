use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("unknown tag {tag} at line {line}")]
    UnknownTag { tag: String, line: usize },

    #[error("invalid tagset: {0}")]
    InvalidTagset(String),

    #[error("lexicon is empty")]
    EmptyLexicon,

    #[error("sentence is not tagged (token {index} has no POS)")]
    Untagged { index: usize },

    #[error("insertion offsets must be strictly increasing (offset {offset} after {previous})")]
    OverlappingOffsets { previous: usize, offset: usize },

    #[error("insertion offset {offset} out of range for text of {len} characters")]
    OffsetOutOfRange { offset: usize, len: usize },

    #[error("candidate {key} has status {status}; only accepted or auto-applied candidates can be applied")]
    NotApplicable { key: String, status: String },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("unknown category {category} at line {line}")]
    UnknownCategory { category: String, line: usize },

    #[error("duplicate word {surface} at line {line}")]
    DuplicateWord { surface: String, line: usize },

    #[error("hyps and refs differ in length ({hyps} vs {refs})")]
    LengthMismatch { hyps: usize, refs: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid metric config: {0}")]
    InvalidMetricConfig(String),

    #[error("texts must be non-empty")]
    EmptyBatch,

    #[error("invalid backend config: {0}")]
    InvalidBackendConfig(String),

    #[error("batch {batch} failed after {attempts} attempt(s): {reason}")]
    BatchFailed {
        batch: usize,
        attempts: usize,
        reason: String,
    },

    #[error("protocol error in batch {batch}: {reason}")]
    Protocol { batch: usize, reason: String },

    #[error("unsupported backend spec {0:?}; expected http:<url> or mock:<path>")]
    BackendSpec(String),

    #[error("expected {expected} columns at line {line}, found {found}")]
    ColumnCount { line: usize, expected: usize, found: usize },

    #[error("duplicate id {id} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("requested split sizes total {requested} but corpus has {available} pairs")]
    SplitTooLarge { requested: usize, available: usize },

    #[error("translating ablation variant for {word:?} failed: {source}")]
    VariantFailed {
        word: String,
        #[source]
        source: Box<Error>,
    },

    #[error("decision at line {line} references unknown candidate {key}")]
    UnknownCandidate { key: String, line: usize },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        Error::MalformedLine {
            line,
            reason: reason.into(),
        }
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
