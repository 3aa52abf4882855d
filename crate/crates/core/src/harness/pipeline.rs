//! End-to-end glue driven by the config file: raw run -> features ->
//! labeling -> images.

use crate::error::{Error, Result};
use crate::features::{FeatureSeries, TsfKind};
use crate::harness::config::Config;
use crate::imaging::{balance_classes, imagify_run, ImagingConfig, SignalImage};
use crate::ingest::{load_run, synth_run, SignalSeries};
use crate::labeling::{label_run, label_run_2d, WearLabeling};

pub fn build_series(cfg: &Config) -> Result<SignalSeries> {
    match cfg.data.source.as_str() {
        "synthetic" => synth_run(&cfg.synth.profile(), cfg.synth.seed),
        "directory" => {
            let dir = cfg
                .data
                .run_dir
                .as_ref()
                .ok_or_else(|| Error::Config("data.run_dir required for directory source".into()))?;
            load_run(dir, cfg.data.channel)
        }
        other => Err(Error::Config(format!(
            "data.source must be \"synthetic\" or \"directory\", got {other:?}"
        ))),
    }
}

pub fn build_features(cfg: &Config, series: &SignalSeries) -> Result<FeatureSeries> {
    let kind = TsfKind::parse(&cfg.features.tsf)?;
    FeatureSeries::compute(series, kind, cfg.features.entropy_window)
}

pub fn build_labeling(cfg: &Config, series: &SignalSeries, feature: &FeatureSeries) -> Result<WearLabeling> {
    if cfg.labeling.two_dimensional {
        // Pair each entropy window with the feature value at its last
        // snapshot, the snapshot the window labels.
        let offset = cfg.features.entropy_window - 1;
        let aligned: Vec<f64> = feature.values[offset..].to_vec();
        label_run_2d(
            &feature.entropy,
            &aligned,
            cfg.features.entropy_window,
            cfg.labeling.k,
            cfg.labeling.seed,
        )
    } else {
        label_run(
            &feature.entropy,
            cfg.features.entropy_window,
            cfg.labeling.k,
            cfg.labeling.seed,
        )
    }
    .and_then(|labeling| {
        if labeling.assignment.len() != series.len() {
            return Err(Error::LabelCoverage {
                labeled: labeling.assignment.len(),
                snapshots: series.len(),
            });
        }
        Ok(labeling)
    })
}

pub fn build_images(
    cfg: &Config,
    series: &SignalSeries,
    labeling: &WearLabeling,
) -> Result<Vec<SignalImage>> {
    let imaging = ImagingConfig {
        m: cfg.imaging.m,
        step: cfg.imaging.step,
        balance_seed: cfg.imaging.balance_seed,
    };
    let images = imagify_run(series, labeling, &imaging)?;
    if cfg.imaging.balance {
        balance_classes(images, cfg.labeling.k, cfg.imaging.balance_seed)
    } else {
        Ok(images)
    }
}

/// The full front half of the pipeline: balanced labeled images from config.
pub fn build_dataset(cfg: &Config) -> Result<Vec<SignalImage>> {
    let series = build_series(cfg)?;
    let feature = build_features(cfg, &series)?;
    let labeling = build_labeling(cfg, &series, &feature)?;
    build_images(cfg, &series, &labeling)
}

/// Entropy value aligned to a snapshot index, when the window ending at that
/// snapshot exists.
pub fn entropy_at(feature: &FeatureSeries, snapshot: usize) -> Option<f64> {
    snapshot
        .checked_sub(feature.window_len - 1)
        .and_then(|j| feature.entropy.get(j))
        .copied()
}
