use std::path::PathBuf;

use thiserror::Error;

/// Unified error type for the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: malformed numeric field {field:?}")]
    MalformedField {
        path: String,
        line: usize,
        field: String,
    },

    #[error("{path}: line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        path: String,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: no sample rows")]
    EmptySnapshot { path: String },

    #[error("filename {name:?} does not encode a timestamp (expected YYYY.MM.DD.HH.MM.SS)")]
    TimestampFormat { name: String },

    #[error("{0}: directory contains no snapshot files")]
    EmptyRun(PathBuf),

    #[error("channel {requested} out of range: run has {available} channels")]
    ChannelRange { requested: usize, available: usize },

    #[error("timestamps not strictly increasing at snapshot {index} ({id})")]
    TimestampOrder { index: usize, id: String },

    #[error("snapshot {index} ({id}) has {found} samples, expected {expected}")]
    SampleCount {
        index: usize,
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid synthetic profile: {0}")]
    Profile(String),

    #[error("degenerate statistics{}: {reason}", fmt_index(.snapshot))]
    DegenerateStats {
        reason: &'static str,
        snapshot: Option<usize>,
    },

    #[error("entropy input at index {index} is negative ({value}); use a nonnegative feature")]
    EntropyDomain { index: usize, value: f64 },

    #[error("entropy window length {window_len} exceeds series length {len}")]
    EntropyWindow { window_len: usize, len: usize },

    #[error("cannot form {k} clusters from {points} points")]
    ClusterCapacity { points: usize, k: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("wear level {label} has no images; cannot balance")]
    EmptyClass { label: usize },

    #[error("labeling covers {labeled} snapshots but the run has {snapshots}")]
    LabelCoverage { labeled: usize, snapshots: usize },

    #[error("bad pgm data: {0}")]
    Pgm(String),

    #[error("bad dataset manifest: {0}")]
    Manifest(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("prediction/label length mismatch: {predictions} vs {labels}")]
    MetricLength { predictions: usize, labels: usize },

    #[error("class index {value} out of range for {k} classes")]
    ClassRange { value: usize, k: usize },

    #[error("non-finite loss at training step {step}{}", fmt_run(.run))]
    Divergence { step: usize, run: Option<usize> },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("bad model spec: {0}")]
    ModelSpec(String),

    #[error("bad config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_index(snapshot: &Option<usize>) -> String {
    match snapshot {
        Some(i) => format!(" at snapshot {i}"),
        None => String::new(),
    }
}

fn fmt_run(run: &Option<usize>) -> String {
    match run {
        Some(r) => format!(" (run {r})"),
        None => String::new(),
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that indicate diverging training rather than bad input.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
