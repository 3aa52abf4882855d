//! Parameter storage and seeded initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cnn::model::{LayerSpec, ModelSpec, ValueShape};
use crate::cnn::tensor::{Matrix, Tensor4};
use crate::error::Result;

/// Weights and bias of one parameterized layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPair {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Inputs feeding each output unit; drives the init scale.
    pub fan_in: usize,
}

/// One entry per layer of the owning spec; `None` for parameterless layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub layers: Vec<Option<ParamPair>>,
}

impl ParamSet {
    /// Total parameter count, in checkpoint order.
    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .map(|p| p.weights.len() + p.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weights of a conv layer viewed as (out_c, in_c, kh, kw).
    pub fn conv_weights(&self, layer: usize, oc: usize, ic: usize, kh: usize, kw: usize) -> Tensor4 {
        let pair = self.layers[layer].as_ref().expect("conv layer has params");
        Tensor4 {
            n: oc,
            c: ic,
            h: kh,
            w: kw,
            data: pair.weights.clone(),
        }
    }

    /// Weights of an fc layer viewed as (out, in).
    pub fn fc_weights(&self, layer: usize, out: usize, input: usize) -> Matrix {
        let pair = self.layers[layer].as_ref().expect("fc layer has params");
        Matrix {
            rows: out,
            cols: input,
            data: pair.weights.clone(),
        }
    }
}

/// He-uniform initialization: weights drawn from
/// `U(-sqrt(6/fan_in), sqrt(6/fan_in))` (variance `2/fan_in`), biases zero.
/// Deterministic for a fixed spec and seed.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Result<ParamSet> {
    let trace = spec.shape_trace()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut in_shape = ValueShape::Spatial {
        c: spec.input.0,
        h: spec.input.1,
        w: spec.input.2,
    };
    for (layer, out_shape) in spec.layers.iter().zip(&trace) {
        let pair = match *layer {
            LayerSpec::Conv {
                kh,
                kw,
                out_channels,
                ..
            } => {
                let ic = match in_shape {
                    ValueShape::Spatial { c, .. } => c,
                    ValueShape::Flat { .. } => unreachable!("validated by shape_trace"),
                };
                let fan_in = ic * kh * kw;
                Some(draw(&mut rng, out_channels * fan_in, out_channels, fan_in))
            }
            LayerSpec::Fc { width } => {
                let fan_in = in_shape.features();
                Some(draw(&mut rng, width * fan_in, width, fan_in))
            }
            _ => None,
        };
        layers.push(pair);
        in_shape = *out_shape;
    }
    Ok(ParamSet { layers })
}

fn draw(rng: &mut ChaCha8Rng, weight_count: usize, bias_count: usize, fan_in: usize) -> ParamPair {
    let bound = (6.0 / fan_in as f64).sqrt();
    ParamPair {
        weights: (0..weight_count).map(|_| rng.gen_range(-bound..bound)).collect(),
        bias: vec![0.0; bias_count],
        fan_in,
    }
}
