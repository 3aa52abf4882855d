//! Turns raw bearing vibration recordings into wear-level diagnoses.
//!
//! The pipeline has five stages, each usable on its own:
//!
//! 1. [`ingest`] — parse snapshot files (or synthesize runs) into typed series
//! 2. [`features`] — per-snapshot statistical features and their sliding-window
//!    entropy transform
//! 3. [`labeling`] — unsupervised wear levels via 1-D k-means over the entropy
//!    series
//! 4. [`imaging`] — overlapping square grayscale images cut from the raw
//!    signal, labeled per source snapshot
//! 5. [`cnn`] / [`harness`] — a small CNN engine with exact backpropagation,
//!    plus the split/train/evaluate/report machinery around it

pub mod cnn;
pub mod dataset;
pub mod error;
pub mod features;
pub mod harness;
pub mod imaging;
pub mod ingest;
pub mod labeling;
pub mod pgm;

pub use error::{Error, Result};
pub use features::{FeatureSeries, TsfKind};
pub use imaging::{ImagingConfig, SignalImage};
pub use ingest::{SignalSeries, SnapshotSignal, SynthProfile, VibrationSnapshot};
pub use labeling::WearLabeling;
