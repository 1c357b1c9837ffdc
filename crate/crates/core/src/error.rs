//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is not valid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    InvalidSplitFraction(f64),

    #[error("label {label:?} has only {count} sentence(s); stratified splitting needs at least 2")]
    LabelTooSmall { label: String, count: usize },

    #[error("language {0:?} is absent from the corpus")]
    LanguageAbsent(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("invalid registry: {0}")]
    InvalidRegistry(String),

    #[error("invalid n-gram spec: {0}")]
    InvalidSpec(String),

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("cannot encode an empty token sequence")]
    EmptySequence,

    #[error("class {0:?} has no training examples")]
    EmptyClass(String),

    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("length mismatch: {left} predictions vs {right} gold labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("hyper-parameter grid is empty: {0}")]
    EmptyGrid(String),

    #[error("member {index} classes do not match the ensemble registry")]
    MemberClassMismatch { index: usize },

    #[error("{rows} rows are too few for {k}-fold cross validation")]
    TooFewRows { rows: usize, k: usize },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("adapter protocol violation at line {line}: {reason}")]
    AdapterProtocol { line: usize, reason: String },

    #[error("adapter failed: {0}")]
    AdapterFailed(String),

    #[error("invalid support policy: {0}")]
    InvalidPolicy(String),

    #[error("model file format version {found} is not supported (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("invalid model file at field `{path}`: {reason}")]
    InvalidModelFile { path: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
