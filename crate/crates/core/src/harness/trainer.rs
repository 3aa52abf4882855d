//! Batched training and evaluation over image datasets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cnn::{train_step, Matrix, ModelSpec, Network, Optimizer, OptimizerKind, Tensor4};
use crate::error::{Error, Result};
use crate::harness::metrics::{compute_metrics, RunMetrics};
use crate::imaging::SignalImage;

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::adam(),
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 30,
        }
    }
}

/// Stacks images into a (n, 1, m, m) tensor with pixels scaled to [0, 1].
pub fn batch_tensor(images: &[SignalImage], indices: &[usize]) -> Result<Tensor4> {
    let first = indices
        .first()
        .ok_or_else(|| Error::Shape("empty batch".into()))?;
    let m = images[*first].m;
    let mut data = Vec::with_capacity(indices.len() * m * m);
    for &i in indices {
        let img = &images[i];
        if img.m != m {
            return Err(Error::Shape(format!(
                "mixed image sizes in batch: {m} vs {}",
                img.m
            )));
        }
        data.extend(img.pixels.iter().map(|&p| p as f64 / 255.0));
    }
    Tensor4::from_vec(indices.len(), 1, m, m, data)
}

pub fn batch_labels(images: &[SignalImage], indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|&i| images[i].label).collect()
}

/// Trains a fresh network. Epoch order is reshuffled from the seeded stream;
/// batches run in order, the last one possibly short. Returns the network and
/// the per-step loss trace.
pub fn train_model(
    spec: ModelSpec,
    images: &[SignalImage],
    train_indices: &[usize],
    cfg: &TrainConfig,
    init_seed: u64,
    shuffle_seed: u64,
) -> Result<(Network, Vec<f64>)> {
    if train_indices.is_empty() {
        return Err(Error::Split("empty training set".into()));
    }
    let mut net = Network::new(spec, init_seed)?;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &net.params);
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut order: Vec<usize> = train_indices.to_vec();
    let mut losses = Vec::new();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch = batch_tensor(images, chunk)?;
            let labels = batch_labels(images, chunk);
            losses.push(train_step(&mut net, &batch, &labels, &mut opt)?);
        }
    }
    Ok((net, losses))
}

/// Predicts in bounded batches.
pub fn predict_all(
    net: &Network,
    images: &[SignalImage],
    indices: &[usize],
    batch_size: usize,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(batch_size.max(1)) {
        let batch = batch_tensor(images, chunk)?;
        out.extend(net.predict(&batch)?);
    }
    Ok(out)
}

/// Evaluates a trained network on the given indices.
pub fn evaluate(
    net: &Network,
    images: &[SignalImage],
    indices: &[usize],
    k: usize,
    batch_size: usize,
) -> Result<RunMetrics> {
    let predictions = predict_all(net, images, indices, batch_size)?;
    let labels = batch_labels(images, indices);
    compute_metrics(&predictions, &labels, k)
}

/// Mean probability rows for diagnostics; rows sum to one.
pub fn probabilities(net: &Network, images: &[SignalImage], indices: &[usize]) -> Result<Matrix> {
    let batch = batch_tensor(images, indices)?;
    net.probabilities(&batch)
}
