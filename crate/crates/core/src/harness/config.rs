//! The global structured config file (TOML). Every stage reads its
//! parameters and seeds from here; no wall-clock randomness anywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cnn::OptimizerKind;
use crate::error::{Error, Result};
use crate::ingest::SynthProfile;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub features: FeaturesConfig,
    pub labeling: LabelingConfig,
    pub imaging: ImagingSection,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// `"synthetic"` or `"directory"`.
    pub source: String,
    /// Snapshot directory for `source = "directory"`.
    pub run_dir: Option<PathBuf>,
    /// Accelerometer channel to analyze.
    pub channel: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: "synthetic".into(),
            run_dir: None,
            channel: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub base_amplitude: f64,
    pub noise_level: f64,
    pub wear_growth_rate: f64,
    pub snapshots: usize,
    pub samples_per_snapshot: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            base_amplitude: 0.05,
            noise_level: 0.02,
            wear_growth_rate: 6.0,
            snapshots: 400,
            samples_per_snapshot: 4096,
            seed: 11,
        }
    }
}

impl SynthConfig {
    pub fn profile(&self) -> SynthProfile {
        SynthProfile {
            base_amplitude: self.base_amplitude,
            noise_level: self.noise_level,
            wear_growth_rate: self.wear_growth_rate,
            snapshots: self.snapshots,
            samples_per_snapshot: self.samples_per_snapshot,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeaturesConfig {
    /// Feature fed to the entropy transform and the labeling stage.
    pub tsf: String,
    pub entropy_window: usize,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        Self {
            tsf: "rms".into(),
            entropy_window: 16,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelingConfig {
    pub k: usize,
    pub seed: u64,
    /// Cluster (entropy, feature) pairs instead of entropy alone.
    pub two_dimensional: bool,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            k: 7,
            seed: 1,
            two_dimensional: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImagingSection {
    pub m: usize,
    pub step: usize,
    pub balance: bool,
    pub balance_seed: u64,
}

impl Default for ImagingSection {
    fn default() -> Self {
        Self {
            m: 64,
            step: 64,
            balance: true,
            balance_seed: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// `"alexnet-mod"`, `"lenet5"` or `"lenet5-wen"`.
    pub preset: String,
    pub fc1: usize,
    /// 0 means no second hidden fully connected layer.
    pub fc2: usize,
    /// Divide every conv width by this (desk-scale runs).
    pub conv_div: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            preset: "alexnet-mod".into(),
            fc1: 2560,
            fc2: 256,
            conv_div: 1,
        }
    }
}

impl ModelConfig {
    pub fn fc2_option(&self) -> Option<usize> {
        (self.fc2 > 0).then_some(self.fc2)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    /// `"adam"` or `"sgd"`.
    pub optimizer: String,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub train_fraction: f64,
    pub seed: u64,
    /// Repetitions for reports.
    pub runs: usize,
    /// Split at snapshot granularity instead of image granularity.
    pub split_by_snapshot: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            optimizer: "adam".into(),
            learning_rate: 1e-3,
            momentum: 0.9,
            batch_size: 64,
            epochs: 30,
            train_fraction: 0.7,
            seed: 3,
            runs: 10,
            split_by_snapshot: false,
        }
    }
}

impl TrainSection {
    pub fn optimizer_kind(&self) -> Result<OptimizerKind> {
        match self.optimizer.as_str() {
            "adam" => Ok(OptimizerKind::adam()),
            "sgd" => Ok(OptimizerKind::sgd(self.momentum)),
            other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub fc1: Vec<usize>,
    /// 0 entries mean the single-FC variant.
    pub fc2: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            fc1: vec![512, 1024, 1536, 2048, 2560, 3072, 3584],
            fc2: vec![0],
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}
