//! `wearnet` — vibration data to wear-level diagnosis.
//!
//! Every stage of the pipeline is a subcommand; all parameters and seeds come
//! from a TOML config file (see `Config`), with a few flag overrides for the
//! common cases. Exit codes: 0 success, 1 usage, 2 data error, 3 training
//! divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wearnet_core::cnn::{checkpoint, preset};
use wearnet_core::dataset;
use wearnet_core::error::Error;
use wearnet_core::features::{compute_tsf, TsfKind};
use wearnet_core::harness::{
    config::Config,
    pipeline,
    report::{render_csv, render_text},
    runner::{fc_sweep, single_run, ReportBundle, RunProtocol},
    trainer::{evaluate, TrainConfig},
};
use wearnet_core::imaging::SignalImage;

#[derive(Parser)]
#[command(name = "wearnet", version, about = "Bearing wear diagnosis from vibration data")]
struct Cli {
    /// TOML config file; defaults are used when absent.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a run (or synthesize one) and print a summary.
    Ingest(IngestArgs),
    /// Emit the per-snapshot feature table (CSV).
    Features(FeaturesArgs),
    /// Cluster the entropy series and write the labeling manifest (CSV).
    Label(LabelArgs),
    /// Cut labeled signals into PGM images plus manifest.csv.
    Imagify(ImagifyArgs),
    /// Train one model and save a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint against an image dataset.
    Eval(EvalArgs),
    /// Sweep fully connected widths and aggregate repeated runs.
    Sweep(SweepArgs),
    /// Render sweep/train bundles as text and CSV tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct DataOverrides {
    /// Snapshot directory (switches the data source to "directory").
    #[arg(long, value_name = "DIR")]
    run_dir: Option<PathBuf>,
    /// Accelerometer channel to analyze.
    #[arg(long)]
    channel: Option<usize>,
}

impl DataOverrides {
    fn apply(&self, cfg: &mut Config) {
        if let Some(dir) = &self.run_dir {
            cfg.data.source = "directory".into();
            cfg.data.run_dir = Some(dir.clone());
        }
        if let Some(c) = self.channel {
            cfg.data.channel = c;
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DataOverrides,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    data: DataOverrides,
    /// Comma-separated feature list, or "all".
    #[arg(long, default_value = "all")]
    tsf: String,
    /// Output file (stdout when absent).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LabelArgs {
    #[command(flatten)]
    data: DataOverrides,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImagifyArgs {
    #[command(flatten)]
    data: DataOverrides,
    /// Where PGM files and manifest.csv go.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Image side length.
    #[arg(long)]
    m: Option<usize>,
    /// Window step in samples.
    #[arg(long)]
    step: Option<usize>,
    /// Balance classes to the smallest one.
    #[arg(long)]
    balance: Option<bool>,
    /// Seed for balanced downsampling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataOverrides,
    /// Train from a previously written image dataset instead of rebuilding
    /// the pipeline.
    #[arg(long, value_name = "DIR")]
    dataset: Option<PathBuf>,
    /// Where the checkpoint and metrics go.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint written by `train`.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Image dataset directory (manifest.csv + PGMs).
    #[arg(long, value_name = "DIR")]
    dataset: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataOverrides,
    #[arg(long, value_name = "DIR")]
    dataset: Option<PathBuf>,
    /// Bundle JSON output.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Bundle JSON written by `sweep` or `train`.
    #[arg(long, value_name = "FILE")]
    bundles: PathBuf,
    /// Also write the CSV rendering here.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Usage problems exit 1 (clap's default would be 2, which is reserved
    // for data errors here).
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_divergence() { 3 } else { 2 })
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, Error> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Ingest(args) => {
            args.data.apply(&mut cfg);
            cmd_ingest(&cfg)
        }
        Command::Features(args) => {
            args.data.apply(&mut cfg);
            cmd_features(&cfg, &args)
        }
        Command::Label(args) => {
            args.data.apply(&mut cfg);
            cmd_label(&cfg, &args)
        }
        Command::Imagify(args) => {
            args.data.apply(&mut cfg);
            if let Some(m) = args.m {
                cfg.imaging.m = m;
            }
            if let Some(s) = args.step {
                cfg.imaging.step = s;
            }
            if let Some(b) = args.balance {
                cfg.imaging.balance = b;
            }
            if let Some(seed) = args.seed {
                cfg.imaging.balance_seed = seed;
            }
            cmd_imagify(&cfg, &args.out_dir)
        }
        Command::Train(args) => {
            args.data.apply(&mut cfg);
            cmd_train(&cfg, &args)
        }
        Command::Eval(args) => cmd_eval(&args),
        Command::Sweep(args) => {
            args.data.apply(&mut cfg);
            cmd_sweep(&cfg, &args)
        }
        Command::Report(args) => cmd_report(&args),
    }
}

fn cmd_ingest(cfg: &Config) -> Result<(), Error> {
    let series = pipeline::build_series(cfg)?;
    let snaps = series.snapshots();
    println!("snapshots:            {}", series.len());
    println!("samples per snapshot: {}", series.samples_per_snapshot());
    println!("channel index:        {}", series.channel_index);
    println!("first timestamp:      {}", snaps[0].timestamp);
    println!("last timestamp:       {}", snaps[snaps.len() - 1].timestamp);
    let first_rms = compute_tsf(&snaps[0].samples, TsfKind::Rms)?;
    let last_rms = compute_tsf(&snaps[snaps.len() - 1].samples, TsfKind::Rms)?;
    println!("rms first -> last:    {first_rms:.6} -> {last_rms:.6}");
    Ok(())
}

fn parse_tsf_list(spec: &str) -> Result<Vec<TsfKind>, Error> {
    if spec == "all" {
        return Ok(TsfKind::ALL.to_vec());
    }
    spec.split(',').map(|s| TsfKind::parse(s.trim())).collect()
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_features(cfg: &Config, args: &FeaturesArgs) -> Result<(), Error> {
    let kinds = parse_tsf_list(&args.tsf)?;
    let series = pipeline::build_series(cfg)?;
    let feature = pipeline::build_features(cfg, &series)?;

    let mut columns = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        columns.push(wearnet_core::features::tsf_series(&series, kind)?);
    }
    let mut text = String::from("index,timestamp");
    for kind in &kinds {
        text.push(',');
        text.push_str(kind.name());
    }
    text.push_str(&format!(",entropy-{}\n", feature.kind.name()));
    for (i, snap) in series.snapshots().iter().enumerate() {
        text.push_str(&format!("{i},{}", snap.timestamp));
        for col in &columns {
            text.push_str(&format!(",{}", col[i]));
        }
        match pipeline::entropy_at(&feature, i) {
            Some(h) => text.push_str(&format!(",{h}\n")),
            None => text.push_str(",\n"),
        }
    }
    write_or_print(&args.out, &text)
}

fn cmd_label(cfg: &Config, args: &LabelArgs) -> Result<(), Error> {
    let series = pipeline::build_series(cfg)?;
    let feature = pipeline::build_features(cfg, &series)?;
    let labeling = pipeline::build_labeling(cfg, &series, &feature)?;

    let mut text = String::from("snapshot,timestamp,entropy,level,level_name\n");
    for (i, snap) in series.snapshots().iter().enumerate() {
        let level = labeling.assignment[i];
        let entropy = pipeline::entropy_at(&feature, i)
            .map(|h| h.to_string())
            .unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            snap.id, snap.timestamp, entropy, level, labeling.level_names[level]
        ));
    }
    write_or_print(&args.out, &text)?;
    if args.out.is_some() {
        let counts = labeling.level_counts();
        for (level, count) in counts.iter().enumerate() {
            println!("{:<10} {count} snapshots", labeling.level_names[level]);
        }
    }
    Ok(())
}

fn cmd_imagify(cfg: &Config, out_dir: &PathBuf) -> Result<(), Error> {
    let images = pipeline::build_dataset(cfg)?;
    dataset::save(out_dir, &images)?;
    let mut counts = vec![0usize; cfg.labeling.k];
    for img in &images {
        counts[img.label] += 1;
    }
    println!("wrote {} images to {}", images.len(), out_dir.display());
    for (level, count) in counts.iter().enumerate() {
        println!("level {level}: {count} images");
    }
    Ok(())
}

fn load_or_build_images(cfg: &Config, dir: &Option<PathBuf>) -> Result<Vec<SignalImage>, Error> {
    match dir {
        Some(d) => dataset::load(d),
        None => pipeline::build_dataset(cfg),
    }
}

fn model_for(cfg: &Config, m: usize) -> Result<wearnet_core::cnn::ModelSpec, Error> {
    preset(
        &cfg.model.preset,
        m,
        cfg.model.conv_div,
        cfg.model.fc1,
        cfg.model.fc2_option(),
        cfg.labeling.k,
    )
}

fn protocol_for(cfg: &Config) -> Result<RunProtocol, Error> {
    Ok(RunProtocol {
        train: TrainConfig {
            optimizer: cfg.train.optimizer_kind()?,
            learning_rate: cfg.train.learning_rate,
            batch_size: cfg.train.batch_size,
            epochs: cfg.train.epochs,
        },
        train_fraction: cfg.train.train_fraction,
        split_by_snapshot: cfg.train.split_by_snapshot,
        runs: cfg.train.runs,
        base_seed: cfg.train.seed,
    })
}

fn print_metrics(m: &wearnet_core::harness::RunMetrics) {
    println!("accuracy:  {:.4}", m.accuracy);
    println!("precision: {:.4}", m.precision);
    println!("recall:    {:.4}", m.recall);
    println!("f1:        {:.4}", m.f1);
    println!("mse:       {:.5}", m.mse);
}

fn cmd_train(cfg: &Config, args: &TrainArgs) -> Result<(), Error> {
    let images = load_or_build_images(cfg, &args.dataset)?;
    let m = images[0].m;
    let spec = model_for(cfg, m)?;
    let protocol = protocol_for(cfg)?;
    println!(
        "training {} on {} images ({} epochs, batch {})",
        spec.name,
        images.len(),
        protocol.train.epochs,
        protocol.train.batch_size
    );
    let outcome = single_run(spec, &images, cfg.labeling.k, &protocol, protocol.base_seed)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let ckpt_path = args.out_dir.join("model.ckpt");
    checkpoint::save(&ckpt_path, &outcome.network.spec, &outcome.network.params)?;
    let metrics_json = serde_json::to_string_pretty(&outcome.metrics)
        .map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(args.out_dir.join("metrics.json"), metrics_json)
        .map_err(|e| Error::io(&args.out_dir, e))?;
    println!(
        "split: {} train / {} test; final loss {:.5}",
        outcome.train_size,
        outcome.test_size,
        outcome.losses.last().copied().unwrap_or(f64::NAN)
    );
    print_metrics(&outcome.metrics);
    println!("checkpoint: {}", ckpt_path.display());
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Error> {
    let (spec, params) = checkpoint::load(&args.checkpoint)?;
    let net = wearnet_core::cnn::Network::from_parts(spec, params)?;
    let images = dataset::load(&args.dataset)?;
    let k = net.spec.classes();
    let indices: Vec<usize> = (0..images.len()).collect();
    let metrics = evaluate(&net, &images, &indices, k, 64)?;
    println!("{} on {} images", net.spec.name, images.len());
    print_metrics(&metrics);
    Ok(())
}

fn cmd_sweep(cfg: &Config, args: &SweepArgs) -> Result<(), Error> {
    let images = load_or_build_images(cfg, &args.dataset)?;
    let m = images[0].m;
    let protocol = protocol_for(cfg)?;
    let bundles = fc_sweep(
        &cfg.model.preset,
        m,
        cfg.model.conv_div,
        cfg.labeling.k,
        &cfg.sweep.fc1,
        &cfg.sweep.fc2,
        &images,
        &protocol,
    )?;
    let json = serde_json::to_string_pretty(&bundles).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&args.out, json).map_err(|e| Error::io(&args.out, e))?;
    print!("{}", render_text(&bundles));
    println!("bundles written to {}", args.out.display());
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.bundles).map_err(|e| Error::io(&args.bundles, e))?;
    let bundles: Vec<ReportBundle> =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad bundle json: {e}")))?;
    print!("{}", render_text(&bundles));
    if let Some(csv_path) = &args.csv {
        std::fs::write(csv_path, render_csv(&bundles)).map_err(|e| Error::io(csv_path, e))?;
    }
    Ok(())
}
