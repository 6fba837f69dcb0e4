//! Error type shared across the crate.
//!
//! Variants are grouped by how the CLI reports them: validation problems
//! (bad records, bad configuration, missing ground truth) exit with code 1,
//! I/O failures with code 2, and internal invariant violations with code 3.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A record failed validation; names the offending id and field.
    #[error("record {id}: invalid {field}: {reason}")]
    InvalidRecord {
        id: u64,
        field: &'static str,
        reason: String,
    },

    /// A line in a JSONL file could not be parsed at all.
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("duplicate sample id {id}")]
    DuplicateId { id: u64 },

    #[error("dataset is empty")]
    EmptyDataset,

    /// Manifest and record file disagree (counts, dimensions).
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation that needs ground-truth labels was given records without.
    #[error("ground-truth labels required: {0}")]
    MissingTruth(String),

    /// Not enough values to fit a two-component mixture.
    #[error("too few samples for a mixture fit: {n} < {min}")]
    TooFewSamples { n: usize, min: usize },

    /// A partition file disagrees with the dataset it is scored against.
    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("zero-norm vector: {0}")]
    ZeroNorm(String),

    #[error("empty class {class}")]
    EmptyClass { class: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => 2,
            Error::Internal(_) => 3,
            _ => 1,
        }
    }
}
