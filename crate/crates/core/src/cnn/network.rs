//! Runtime execution of a [`ModelSpec`]: cached forward pass, exact backward
//! pass, and inference helpers.

use crate::cnn::layers;
use crate::cnn::model::{LayerSpec, ModelSpec};
use crate::cnn::params::{init_params, ParamSet};
use crate::cnn::tensor::{Matrix, Tensor4};
use crate::error::{Error, Result};

pub struct Network {
    pub spec: ModelSpec,
    pub params: ParamSet,
}

/// Per-layer gradients, aligned with `ModelSpec::layers`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Option<GradPair>>,
}

#[derive(Debug, Clone)]
pub struct GradPair {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

enum Value {
    T(Tensor4),
    M(Matrix),
}

enum Cache {
    Conv {
        input: Tensor4,
    },
    MaxPool {
        argmax: Vec<usize>,
        input_shape: (usize, usize, usize, usize),
    },
    AvgPool {
        ph: usize,
        pw: usize,
        input_shape: (usize, usize, usize, usize),
    },
    ReluT {
        input: Tensor4,
    },
    ReluM {
        input: Matrix,
    },
    Fc {
        input: Matrix,
        /// Spatial dims when this layer flattened a tensor input.
        from_spatial: Option<(usize, usize, usize, usize)>,
    },
    Softmax,
}

pub struct ForwardCaches {
    caches: Vec<Cache>,
}

impl Network {
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        let params = init_params(&spec, seed)?;
        Ok(Self { spec, params })
    }

    pub fn from_parts(spec: ModelSpec, params: ParamSet) -> Result<Self> {
        spec.shape_trace()?;
        if spec.layers.len() != params.layers.len() {
            return Err(Error::ModelSpec(
                "parameter set does not match layer count".into(),
            ));
        }
        Ok(Self { spec, params })
    }

    fn check_input(&self, input: &Tensor4) -> Result<()> {
        let (c, h, w) = self.spec.input;
        if (input.c, input.h, input.w) != (c, h, w) {
            return Err(Error::Shape(format!(
                "network expects {c}x{h}x{w} inputs, got {}x{}x{}",
                input.c, input.h, input.w
            )));
        }
        Ok(())
    }

    /// Forward pass returning the logits and everything backward needs.
    pub fn forward_cached(&self, input: &Tensor4) -> Result<(Matrix, ForwardCaches)> {
        self.check_input(input)?;
        let mut caches = Vec::with_capacity(self.spec.layers.len());
        let mut value = Value::T(input.clone());
        for (i, layer) in self.spec.layers.iter().enumerate() {
            value = match (*layer, value) {
                (
                    LayerSpec::Conv { kh, kw, out_channels, padding },
                    Value::T(t),
                ) => {
                    let weights =
                        self.params
                            .conv_weights(i, out_channels, t.c, kh, kw);
                    let bias = &self.params.layers[i].as_ref().unwrap().bias;
                    let out = layers::conv2d_forward(&t, &weights, bias, 1, padding)?;
                    caches.push(Cache::Conv { input: t });
                    Value::T(out)
                }
                (LayerSpec::MaxPool { ph, pw }, Value::T(t)) => {
                    let (out, argmax) = layers::maxpool_forward(&t, ph, pw)?;
                    caches.push(Cache::MaxPool {
                        argmax,
                        input_shape: t.shape(),
                    });
                    Value::T(out)
                }
                (LayerSpec::AvgPool { ph, pw }, Value::T(t)) => {
                    let out = layers::avgpool_forward(&t, ph, pw)?;
                    caches.push(Cache::AvgPool {
                        ph,
                        pw,
                        input_shape: t.shape(),
                    });
                    Value::T(out)
                }
                (LayerSpec::Relu, Value::T(t)) => {
                    let out = layers::relu_forward_tensor(&t);
                    caches.push(Cache::ReluT { input: t });
                    Value::T(out)
                }
                (LayerSpec::Relu, Value::M(m)) => {
                    let out = layers::relu_forward_matrix(&m);
                    caches.push(Cache::ReluM { input: m });
                    Value::M(out)
                }
                (LayerSpec::Fc { width }, v) => {
                    let (input, from_spatial) = match v {
                        Value::T(t) => (t.flatten(), Some(t.shape())),
                        Value::M(m) => (m, None),
                    };
                    let weights = self.params.fc_weights(i, width, input.cols);
                    let bias = &self.params.layers[i].as_ref().unwrap().bias;
                    let out = layers::fc_forward(&input, &weights, bias)?;
                    caches.push(Cache::Fc {
                        input,
                        from_spatial,
                    });
                    Value::M(out)
                }
                (LayerSpec::SoftmaxOutput { .. }, Value::M(m)) => {
                    // Training couples softmax with the loss; forward stops
                    // at the logits.
                    caches.push(Cache::Softmax);
                    Value::M(m)
                }
                (spec, _) => {
                    return Err(Error::ModelSpec(format!(
                        "layer {i}: {spec:?} applied to incompatible value"
                    )))
                }
            };
        }
        match value {
            Value::M(logits) => Ok((logits, ForwardCaches { caches })),
            Value::T(_) => Err(Error::ModelSpec("network produced no logits".into())),
        }
    }

    /// Backward pass from the loss gradient with respect to the logits.
    pub fn backward(&self, caches: &ForwardCaches, grad_logits: Matrix) -> Result<Gradients> {
        let mut grads: Vec<Option<GradPair>> = vec![None; self.spec.layers.len()];
        let mut grad = Value::M(grad_logits);
        for (i, layer) in self.spec.layers.iter().enumerate().rev() {
            let cache = &caches.caches[i];
            grad = match (*layer, cache, grad) {
                (LayerSpec::SoftmaxOutput { .. }, Cache::Softmax, g) => g,
                (LayerSpec::Fc { width }, Cache::Fc { input, from_spatial }, Value::M(g)) => {
                    let weights = self.params.fc_weights(i, width, input.cols);
                    let (gi, gw, gb) = layers::fc_backward(&g, input, &weights)?;
                    grads[i] = Some(GradPair {
                        weights: gw.data,
                        bias: gb,
                    });
                    match from_spatial {
                        Some((_, c, h, w)) => Value::T(gi.unflatten(*c, *h, *w)?),
                        None => Value::M(gi),
                    }
                }
                (LayerSpec::Relu, Cache::ReluT { input }, Value::T(g)) => {
                    Value::T(layers::relu_backward_tensor(&g, input)?)
                }
                (LayerSpec::Relu, Cache::ReluM { input }, Value::M(g)) => {
                    Value::M(layers::relu_backward_matrix(&g, input)?)
                }
                (LayerSpec::MaxPool { .. }, Cache::MaxPool { argmax, input_shape }, Value::T(g)) => {
                    Value::T(layers::maxpool_backward(&g, argmax, *input_shape)?)
                }
                (LayerSpec::AvgPool { .. }, Cache::AvgPool { ph, pw, input_shape }, Value::T(g)) => {
                    Value::T(layers::avgpool_backward(&g, *ph, *pw, *input_shape)?)
                }
                (
                    LayerSpec::Conv { kh, kw, out_channels, padding },
                    Cache::Conv { input },
                    Value::T(g),
                ) => {
                    let weights =
                        self.params
                            .conv_weights(i, out_channels, input.c, kh, kw);
                    let (gi, gw, gb) = layers::conv2d_backward(
                        &g,
                        input,
                        &weights,
                        1,
                        padding,
                        i != 0, // the first layer's input gradient is unused
                    )?;
                    grads[i] = Some(GradPair {
                        weights: gw.data,
                        bias: gb,
                    });
                    Value::T(gi)
                }
                _ => {
                    return Err(Error::ModelSpec(format!(
                        "layer {i}: cache/gradient mismatch in backward pass"
                    )))
                }
            };
        }
        Ok(Gradients { layers: grads })
    }

    /// Logits for a batch.
    pub fn forward(&self, input: &Tensor4) -> Result<Matrix> {
        Ok(self.forward_cached(input)?.0)
    }

    /// Softmax class probabilities for a batch.
    pub fn probabilities(&self, input: &Tensor4) -> Result<Matrix> {
        Ok(layers::softmax(&self.forward(input)?))
    }

    /// Argmax class per sample.
    pub fn predict(&self, input: &Tensor4) -> Result<Vec<usize>> {
        let logits = self.forward(input)?;
        Ok((0..logits.rows)
            .map(|r| {
                let row = logits.row(r);
                let mut best = 0;
                for (i, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = i;
                    }
                }
                best
            })
            .collect())
    }
}
