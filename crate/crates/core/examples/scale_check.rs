//! Desk-scale end-to-end dry run used to pick the synthetic profile for the
//! acceptance suite. Prints per-phase timings and per-run metrics.
//!
//! Usage: scale_check [phase]  where phase is "data" (default: everything).

use std::io::Write;
use std::time::Instant;

use wearnet_core::cnn::alexnet_mod_scaled;
use wearnet_core::harness::{config::Config, pipeline, single_run, RunProtocol, TrainConfig};

const CONFIG: &str = r#"
[synth]
base_amplitude = 0.05
noise_level = 0.02
wear_growth_rate = 6.0
snapshots = 160
samples_per_snapshot = 4096
seed = 11

[features]
entropy_window = 8

[labeling]
k = 7
seed = 1

[imaging]
m = 32
step = 128
balance = true
balance_seed = 2
"#;

fn main() {
    let phase = std::env::args().nth(1).unwrap_or_default();
    let cfg = Config::parse(CONFIG).unwrap();

    let t0 = Instant::now();
    let series = pipeline::build_series(&cfg).unwrap();
    let feature = pipeline::build_features(&cfg, &series).unwrap();
    let labeling = pipeline::build_labeling(&cfg, &series, &feature).unwrap();
    println!("level counts (snapshots): {:?}", labeling.level_counts());
    println!(
        "entropy range: {:.4} .. {:.4}",
        feature.entropy.iter().cloned().fold(f64::INFINITY, f64::min),
        feature.entropy.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
    let images = pipeline::build_images(&cfg, &series, &labeling).unwrap();
    let mut class_counts = vec![0usize; 7];
    for img in &images {
        class_counts[img.label] += 1;
    }
    println!(
        "balanced dataset: {} images, per-class {:?}, in {:.1?}",
        images.len(),
        class_counts,
        t0.elapsed()
    );
    std::io::stdout().flush().unwrap();
    if phase == "data" {
        return;
    }

    let spec = alexnet_mod_scaled(32, 4, 256, Some(64), 7).unwrap();
    let protocol = RunProtocol {
        train: TrainConfig {
            epochs: 10,
            batch_size: 64,
            learning_rate: 1e-3,
            ..TrainConfig::default()
        },
        train_fraction: 0.7,
        split_by_snapshot: false,
        runs: 3,
        base_seed: 900,
    };
    for r in 0..3 {
        let t = Instant::now();
        let outcome = single_run(spec.clone(), &images, 7, &protocol, protocol.base_seed + r).unwrap();
        println!(
            "run {r}: accuracy {:.4}, mse {:.5}, final loss {:.4}, {} steps, {:.1?}",
            outcome.metrics.accuracy,
            outcome.metrics.mse,
            outcome.losses.last().unwrap(),
            outcome.losses.len(),
            t.elapsed()
        );
        std::io::stdout().flush().unwrap();
    }
}
