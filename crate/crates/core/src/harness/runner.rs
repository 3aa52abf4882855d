//! Repeated seeded runs and the fully-connected width sweep.
//!
//! Run `r` derives its split, initialization and shuffle seeds from
//! `base_seed + r`, so a report is a pure function of (dataset, config,
//! base seed).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cnn::{model, ModelSpec, Network};
use crate::error::{Error, Result};
use crate::harness::metrics::RunMetrics;
use crate::harness::split::{split_by_snapshot, split_stratified};
use crate::harness::trainer::{evaluate, train_model, TrainConfig};
use crate::imaging::SignalImage;

const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    /// Population standard deviation over the runs.
    pub std: f64,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            mean,
            std: var.sqrt(),
        }
    }
}

/// Max/min/mean/std of every metric over R runs of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub model: String,
    pub runs: usize,
    pub accuracy: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub f1: MetricSummary,
    pub mse: MetricSummary,
}

impl ReportBundle {
    pub fn from_runs(model: String, metrics: &[RunMetrics]) -> Self {
        let collect = |f: fn(&RunMetrics) -> f64| -> Vec<f64> { metrics.iter().map(f).collect() };
        Self {
            model,
            runs: metrics.len(),
            accuracy: MetricSummary::from_values(&collect(|m| m.accuracy)),
            precision: MetricSummary::from_values(&collect(|m| m.precision)),
            recall: MetricSummary::from_values(&collect(|m| m.recall)),
            f1: MetricSummary::from_values(&collect(|m| m.f1)),
            mse: MetricSummary::from_values(&collect(|m| m.mse)),
        }
    }
}

/// How each run splits, trains and evaluates.
#[derive(Debug, Clone, Copy)]
pub struct RunProtocol {
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub split_by_snapshot: bool,
    pub runs: usize,
    pub base_seed: u64,
}

/// Everything one run produces.
pub struct RunOutcome {
    pub network: Network,
    pub metrics: RunMetrics,
    pub losses: Vec<f64>,
    pub train_size: usize,
    pub test_size: usize,
}

/// One full run: split, train from scratch, evaluate on the held-out side.
pub fn single_run(
    spec: ModelSpec,
    images: &[SignalImage],
    k: usize,
    protocol: &RunProtocol,
    run_seed: u64,
) -> Result<RunOutcome> {
    let mut seeds = ChaCha8Rng::seed_from_u64(run_seed);
    let split_seed: u64 = seeds.gen();
    let init_seed: u64 = seeds.gen();
    let shuffle_seed: u64 = seeds.gen();
    let (train_idx, test_idx) = if protocol.split_by_snapshot {
        split_by_snapshot(images, k, protocol.train_fraction, split_seed)?
    } else {
        let labels: Vec<usize> = images.iter().map(|i| i.label).collect();
        split_stratified(&labels, k, protocol.train_fraction, split_seed)?
    };
    debug_assert!(train_idx.iter().all(|i| !test_idx.contains(i)));
    let (net, losses) = train_model(
        spec,
        images,
        &train_idx,
        &protocol.train,
        init_seed,
        shuffle_seed,
    )?;
    let metrics = evaluate(&net, images, &test_idx, k, EVAL_BATCH)?;
    Ok(RunOutcome {
        network: net,
        metrics,
        losses,
        train_size: train_idx.len(),
        test_size: test_idx.len(),
    })
}

/// Runs the model `protocol.runs` times with seeds `base_seed + r` and
/// aggregates the metrics. Divergence errors are tagged with the run index.
pub fn repeated_runs(
    spec: &ModelSpec,
    images: &[SignalImage],
    k: usize,
    protocol: &RunProtocol,
) -> Result<ReportBundle> {
    if protocol.runs == 0 {
        return Err(Error::Config("runs must be >= 1".into()));
    }
    let mut all = Vec::with_capacity(protocol.runs);
    for r in 0..protocol.runs {
        let run_seed = protocol.base_seed.wrapping_add(r as u64);
        let outcome =
            single_run(spec.clone(), images, k, protocol, run_seed).map_err(|e| match e {
                Error::Divergence { step, .. } => Error::Divergence { step, run: Some(r) },
                other => other,
            })?;
        all.push(outcome.metrics);
    }
    Ok(ReportBundle::from_runs(spec.name.clone(), all.as_slice()))
}

/// Builds one model per (fc1, fc2) combination (`fc2 = 0` means a single
/// hidden layer) and aggregates each with [`repeated_runs`]. Bundles come
/// back in sweep order: fc1-major, fc2-minor.
#[allow(clippy::too_many_arguments)]
pub fn fc_sweep(
    preset_name: &str,
    m: usize,
    conv_div: usize,
    classes: usize,
    widths_fc1: &[usize],
    widths_fc2: &[usize],
    images: &[SignalImage],
    protocol: &RunProtocol,
) -> Result<Vec<ReportBundle>> {
    if widths_fc1.is_empty() || widths_fc2.is_empty() {
        return Err(Error::Config("sweep width lists must be non-empty".into()));
    }
    let mut bundles = Vec::with_capacity(widths_fc1.len() * widths_fc2.len());
    for &fc1 in widths_fc1 {
        for &fc2 in widths_fc2 {
            let spec = model::preset(
                preset_name,
                m,
                conv_div,
                fc1,
                (fc2 > 0).then_some(fc2),
                classes,
            )?;
            bundles.push(repeated_runs(&spec, images, classes, protocol)?);
        }
    }
    Ok(bundles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::alexnet_mod_scaled;

    fn toy_images() -> Vec<SignalImage> {
        // Flat dark vs bright images; separable by the first conv bias alone.
        let m = 16;
        let mut images = Vec::new();
        for label in 0..2usize {
            for i in 0..10usize {
                let base = if label == 0 { 40 } else { 200 };
                let pixels = (0..m * m)
                    .map(|p| (base + ((p + i) % 8)) as u8)
                    .collect();
                images.push(SignalImage {
                    m,
                    pixels,
                    label,
                    snapshot_id: format!("s{label}{i}"),
                    subsample_index: i,
                });
            }
        }
        images
    }

    fn quick_protocol(runs: usize) -> RunProtocol {
        RunProtocol {
            train: TrainConfig {
                epochs: 6,
                batch_size: 4,
                ..TrainConfig::default()
            },
            train_fraction: 0.7,
            split_by_snapshot: false,
            runs,
            base_seed: 100,
        }
    }

    #[test]
    fn single_run_bundle_has_degenerate_spread() {
        let images = toy_images();
        let spec = alexnet_mod_scaled(16, 16, 8, None, 2).unwrap();
        let bundle = repeated_runs(&spec, &images, 2, &quick_protocol(1)).unwrap();
        assert_eq!(bundle.runs, 1);
        assert_eq!(bundle.accuracy.max, bundle.accuracy.min);
        assert_eq!(bundle.accuracy.max, bundle.accuracy.mean);
        assert_eq!(bundle.accuracy.std, 0.0);
    }

    #[test]
    fn bundles_are_reproducible() {
        let images = toy_images();
        let spec = alexnet_mod_scaled(16, 16, 8, None, 2).unwrap();
        let a = repeated_runs(&spec, &images, 2, &quick_protocol(2)).unwrap();
        let b = repeated_runs(&spec, &images, 2, &quick_protocol(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn summary_invariants() {
        let s = MetricSummary::from_values(&[0.5, 0.7, 0.6]);
        assert!(s.min <= s.mean && s.mean <= s.max);
        assert!((s.mean - 0.6).abs() < 1e-12);
        assert!(s.std > 0.0);
    }

    #[test]
    fn sweep_covers_grid_and_singleton_matches_repeated_runs() {
        let images = toy_images();
        let protocol = quick_protocol(1);
        let bundles = fc_sweep("alexnet-mod", 16, 16, 2, &[8, 12], &[0, 4], &images, &protocol)
            .unwrap();
        assert_eq!(bundles.len(), 4);
        assert_eq!(bundles[0].model, "CNN-8");
        assert_eq!(bundles[1].model, "CNN-8-4");
        assert_eq!(bundles[2].model, "CNN-12");
        assert_eq!(bundles[3].model, "CNN-12-4");

        let spec = alexnet_mod_scaled(16, 16, 8, None, 2).unwrap();
        let direct = repeated_runs(&spec, &images, 2, &protocol).unwrap();
        assert_eq!(bundles[0], direct);
    }
}
