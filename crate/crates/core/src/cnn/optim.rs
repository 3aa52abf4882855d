//! Parameter updates: SGD with momentum and Adam.

use serde::{Deserialize, Serialize};

use crate::cnn::layers::softmax_cross_entropy;
use crate::cnn::network::{Gradients, Network};
use crate::cnn::params::ParamSet;
use crate::cnn::tensor::Tensor4;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd(momentum: f64) -> Self {
        OptimizerKind::Sgd { momentum }
    }
}

struct Slot {
    /// Velocity for SGD, first moment for Adam.
    m_w: Vec<f64>,
    m_b: Vec<f64>,
    /// Second moment (Adam only).
    v_w: Vec<f64>,
    v_b: Vec<f64>,
}

pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    slots: Vec<Option<Slot>>,
    step: usize,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, params: &ParamSet) -> Self {
        let adam = matches!(kind, OptimizerKind::Adam { .. });
        let slots = params
            .layers
            .iter()
            .map(|p| {
                p.as_ref().map(|pair| Slot {
                    m_w: vec![0.0; pair.weights.len()],
                    m_b: vec![0.0; pair.bias.len()],
                    v_w: vec![0.0; if adam { pair.weights.len() } else { 0 }],
                    v_b: vec![0.0; if adam { pair.bias.len() } else { 0 }],
                })
            })
            .collect();
        Self {
            kind,
            learning_rate,
            slots,
            step: 0,
        }
    }

    /// Completed update count.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn apply(&mut self, params: &mut ParamSet, grads: &Gradients) {
        self.step += 1;
        for (slot, (pair, grad)) in self
            .slots
            .iter_mut()
            .zip(params.layers.iter_mut().zip(&grads.layers))
        {
            let (Some(slot), Some(pair), Some(grad)) = (slot, pair, grad) else {
                continue;
            };
            match self.kind {
                OptimizerKind::Sgd { momentum } => {
                    sgd_update(
                        &mut pair.weights,
                        &mut slot.m_w,
                        &grad.weights,
                        momentum,
                        self.learning_rate,
                    );
                    sgd_update(
                        &mut pair.bias,
                        &mut slot.m_b,
                        &grad.bias,
                        momentum,
                        self.learning_rate,
                    );
                }
                OptimizerKind::Adam { beta1, beta2, epsilon } => {
                    let t = self.step as i32;
                    adam_update(
                        &mut pair.weights,
                        &mut slot.m_w,
                        &mut slot.v_w,
                        &grad.weights,
                        beta1,
                        beta2,
                        epsilon,
                        self.learning_rate,
                        t,
                    );
                    adam_update(
                        &mut pair.bias,
                        &mut slot.m_b,
                        &mut slot.v_b,
                        &grad.bias,
                        beta1,
                        beta2,
                        epsilon,
                        self.learning_rate,
                        t,
                    );
                }
            }
        }
    }
}

fn sgd_update(p: &mut [f64], vel: &mut [f64], g: &[f64], momentum: f64, lr: f64) {
    for ((pv, vv), gv) in p.iter_mut().zip(vel).zip(g) {
        *vv = momentum * *vv + gv;
        *pv -= lr * *vv;
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_update(
    p: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    g: &[f64],
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr: f64,
    t: i32,
) {
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (((pv, mv), vv), gv) in p.iter_mut().zip(m).zip(v).zip(g) {
        *mv = beta1 * *mv + (1.0 - beta1) * gv;
        *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
        let m_hat = *mv / bc1;
        let v_hat = *vv / bc2;
        *pv -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}

/// One forward/backward pass and one optimizer update on a batch whose pixel
/// values are already scaled to [0, 1]. Returns the batch loss.
pub fn train_step(
    net: &mut Network,
    batch: &Tensor4,
    labels: &[usize],
    opt: &mut Optimizer,
) -> Result<f64> {
    let (logits, caches) = net.forward_cached(batch)?;
    let (loss, grad_logits) = softmax_cross_entropy(&logits, labels)?;
    if !loss.is_finite() {
        return Err(Error::Divergence {
            step: opt.step(),
            run: None,
        });
    }
    let grads = net.backward(&caches, grad_logits)?;
    opt.apply(&mut net.params, &grads);
    Ok(loss)
}
