//! End-to-end checks of the command line surface: subcommands, file outputs,
//! and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn wearnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wearnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(
        &path,
        r#"
[synth]
snapshots = 48
samples_per_snapshot = 600
wear_growth_rate = 6.0
seed = 5

[features]
entropy_window = 8

[labeling]
k = 3
seed = 2

[imaging]
m = 16
step = 64
balance = true
balance_seed = 7

[model]
preset = "alexnet-mod"
fc1 = 16
fc2 = 8
conv_div = 16

[train]
epochs = 2
batch_size = 16
runs = 1
seed = 40
"#,
    )
    .unwrap();
    path
}

#[test]
fn usage_error_exits_1() {
    let out = wearnet(&["--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let out = wearnet(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let out = wearnet(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["ingest", "features", "label", "imagify", "train", "eval", "sweep", "report"] {
        assert!(text.contains(sub), "help misses {sub}");
    }
}

#[test]
fn data_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = wearnet(&[
        "ingest",
        "--run-dir",
        dir.path().join("missing").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn ingest_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = wearnet(&["--config", cfg.to_str().unwrap(), "ingest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("snapshots:            48"));
    assert!(text.contains("samples per snapshot: 600"));
}

#[test]
fn ingest_reads_directory_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    std::fs::create_dir(&run).unwrap();
    std::fs::write(run.join("2003.10.22.12.06.24"), "0.1\t0.2\n0.3\t0.4\n").unwrap();
    std::fs::write(run.join("2003.10.22.12.16.24"), "0.5\t0.6\n0.7\t0.8\n").unwrap();
    let out = wearnet(&["ingest", "--run-dir", run.to_str().unwrap(), "--channel", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("snapshots:            2"));
    assert!(text.contains("channel index:        1"));
}

#[test]
fn features_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_file = dir.path().join("features.csv");
    let out = wearnet(&[
        "--config",
        cfg.to_str().unwrap(),
        "features",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_file).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "index,timestamp,rms,kurtosis,skewness,peak-to-peak,crest-factor,shape-factor,impulse-factor,margin-factor,entropy-rms"
    );
    assert_eq!(lines.len(), 1 + 48);
    // Entropy column empty before the first full window (window 8).
    assert!(lines[1].ends_with(','));
    assert!(!lines[8].ends_with(','));

    // Restricted column selection.
    let out = wearnet(&[
        "--config",
        cfg.to_str().unwrap(),
        "features",
        "--tsf",
        "rms,kurtosis",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_file).unwrap();
    assert!(text.starts_with("index,timestamp,rms,kurtosis,entropy-rms"));
}

#[test]
fn label_manifest_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out_file = dir.path().join("labels.csv");
    let out = wearnet(&[
        "--config",
        cfg.to_str().unwrap(),
        "label",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_file).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snapshot,timestamp,entropy,level,level_name");
    assert_eq!(lines.len(), 1 + 48);
    assert!(lines[1].starts_with("synth-00000,"));
    assert!(lines[1].contains("level-"));
}

#[test]
fn full_pipeline_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cfg_s = cfg.to_str().unwrap();
    let data_dir = dir.path().join("images");

    // imagify
    let out = wearnet(&[
        "--config",
        cfg_s,
        "imagify",
        "--out-dir",
        data_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data_dir.join("manifest.csv").exists());
    let manifest = std::fs::read_to_string(data_dir.join("manifest.csv")).unwrap();
    let first_image = manifest.lines().nth(1).unwrap().split(',').next().unwrap();
    assert!(data_dir.join(first_image).exists());
    assert!(first_image.ends_with(".pgm"));

    // train from that dataset
    let model_dir = dir.path().join("model");
    let out = wearnet(&[
        "--config",
        cfg_s,
        "train",
        "--dataset",
        data_dir.to_str().unwrap(),
        "--out-dir",
        model_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model_dir.join("model.ckpt").exists());
    assert!(model_dir.join("metrics.json").exists());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("accuracy:"));

    // eval the checkpoint on the dataset
    let out = wearnet(&[
        "eval",
        "--checkpoint",
        model_dir.join("model.ckpt").to_str().unwrap(),
        "--dataset",
        data_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("accuracy:"));

    // sweep two tiny widths, then report
    let sweep_cfg = dir.path().join("sweep.toml");
    let base = std::fs::read_to_string(&cfg).unwrap();
    std::fs::write(&sweep_cfg, format!("{base}\n[sweep]\nfc1 = [8, 12]\nfc2 = [0]\n")).unwrap();
    let bundles = dir.path().join("bundles.json");
    let out = wearnet(&[
        "--config",
        sweep_cfg.to_str().unwrap(),
        "sweep",
        "--dataset",
        data_dir.to_str().unwrap(),
        "--out",
        bundles.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("CNN-8") && text.contains("CNN-12"));
    assert!(text.contains("-- Accuracy --"));

    let csv = dir.path().join("report.csv");
    let out = wearnet(&[
        "report",
        "--bundles",
        bundles.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("metric,stat,CNN-8,CNN-12"));
}
