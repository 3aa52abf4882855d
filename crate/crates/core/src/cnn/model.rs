//! Architecture descriptions and the three built-in presets.
//!
//! A [`ModelSpec`] is an ordered layer list over a (1, M, M) input. All
//! convolutions use stride 1; zero padding is chosen per preset as the
//! lexicographically smallest assignment that keeps the layer stack feasible
//! (every pool input even, every spatial dim >= 1). On 64x64 inputs all
//! presets resolve to zero padding throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayerSpec {
    Conv {
        kh: usize,
        kw: usize,
        out_channels: usize,
        padding: usize,
    },
    MaxPool {
        ph: usize,
        pw: usize,
    },
    AvgPool {
        ph: usize,
        pw: usize,
    },
    Relu,
    Fc {
        width: usize,
    },
    SoftmaxOutput {
        classes: usize,
    },
}

/// Shape of the value flowing between layers: image-like until the first
/// fully connected layer, a flat feature vector after.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueShape {
    Spatial { c: usize, h: usize, w: usize },
    Flat { features: usize },
}

impl ValueShape {
    pub fn features(&self) -> usize {
        match *self {
            ValueShape::Spatial { c, h, w } => c * h * w,
            ValueShape::Flat { features } => features,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    /// (channels, height, width); always (1, M, M) in this pipeline.
    pub input: (usize, usize, usize),
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    /// Shape after each layer, validating the whole stack.
    pub fn shape_trace(&self) -> Result<Vec<ValueShape>> {
        let (c, h, w) = self.input;
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::ModelSpec("zero-sized input".into()));
        }
        let mut shape = ValueShape::Spatial { c, h, w };
        let mut trace = Vec::with_capacity(self.layers.len());
        let last = self.layers.len().checked_sub(1).ok_or_else(|| {
            Error::ModelSpec("empty layer list".into())
        })?;
        for (i, layer) in self.layers.iter().enumerate() {
            shape = match (*layer, shape) {
                (
                    LayerSpec::Conv {
                        kh,
                        kw,
                        out_channels,
                        padding,
                    },
                    ValueShape::Spatial { h, w, .. },
                ) => {
                    if out_channels == 0 || kh == 0 || kw == 0 {
                        return Err(Error::ModelSpec(format!("layer {i}: empty conv")));
                    }
                    let (ph, pw) = (h + 2 * padding, w + 2 * padding);
                    if kh > ph || kw > pw {
                        return Err(Error::ModelSpec(format!(
                            "layer {i}: kernel {kh}x{kw} exceeds padded input {ph}x{pw}"
                        )));
                    }
                    ValueShape::Spatial {
                        c: out_channels,
                        h: ph - kh + 1,
                        w: pw - kw + 1,
                    }
                }
                (LayerSpec::MaxPool { ph, pw } | LayerSpec::AvgPool { ph, pw }, ValueShape::Spatial { c, h, w }) => {
                    if ph == 0 || pw == 0 || h % ph != 0 || w % pw != 0 {
                        return Err(Error::ModelSpec(format!(
                            "layer {i}: pool {ph}x{pw} does not divide {h}x{w}"
                        )));
                    }
                    ValueShape::Spatial {
                        c,
                        h: h / ph,
                        w: w / pw,
                    }
                }
                (LayerSpec::Relu, s) => s,
                (LayerSpec::Fc { width }, s) => {
                    if width == 0 {
                        return Err(Error::ModelSpec(format!("layer {i}: zero-width fc")));
                    }
                    let _ = s.features();
                    ValueShape::Flat { features: width }
                }
                (LayerSpec::SoftmaxOutput { classes }, s) => {
                    if i != last {
                        return Err(Error::ModelSpec(
                            "softmax output must be the final layer".into(),
                        ));
                    }
                    if s.features() != classes {
                        return Err(Error::ModelSpec(format!(
                            "softmax expects {classes} logits, previous layer yields {}",
                            s.features()
                        )));
                    }
                    ValueShape::Flat { features: classes }
                }
                (layer, ValueShape::Flat { .. }) => {
                    return Err(Error::ModelSpec(format!(
                        "layer {i}: {layer:?} cannot follow a fully connected stage"
                    )));
                }
            };
            trace.push(shape);
        }
        let softmax_count = self
            .layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::SoftmaxOutput { .. }))
            .count();
        if softmax_count != 1 {
            return Err(Error::ModelSpec(format!(
                "expected exactly one softmax output, found {softmax_count}"
            )));
        }
        Ok(trace)
    }

    pub fn classes(&self) -> usize {
        self.layers
            .iter()
            .find_map(|l| match l {
                LayerSpec::SoftmaxOutput { classes } => Some(*classes),
                _ => None,
            })
            .unwrap_or(0)
    }

    /// The conv/pool/fc skeleton with activations and the softmax head
    /// stripped; this is what the architecture tables list.
    pub fn skeleton(&self) -> Vec<LayerSpec> {
        self.layers
            .iter()
            .filter(|l| !matches!(l, LayerSpec::Relu | LayerSpec::SoftmaxOutput { .. }))
            .copied()
            .collect()
    }
}

/// CNN-i / CNN-i-j naming from the hidden fully connected widths.
pub fn model_name(stem: &str, fc1: usize, fc2: Option<usize>) -> String {
    match fc2 {
        Some(j) => format!("{stem}-{fc1}-{j}"),
        None => format!("{stem}-{fc1}"),
    }
}

/// Assembles conv/pool stages plus the fully connected head, inserting a relu
/// after every conv and every hidden fc.
fn assemble(
    name: String,
    m: usize,
    stages: &[Stage],
    paddings: &[usize],
    fc_widths: &[usize],
    classes: usize,
) -> ModelSpec {
    let mut layers = Vec::new();
    let mut p = paddings.iter();
    for stage in stages {
        match *stage {
            Stage::Conv { k, out } => {
                layers.push(LayerSpec::Conv {
                    kh: k,
                    kw: k,
                    out_channels: out,
                    padding: *p.next().expect("padding per conv"),
                });
                layers.push(LayerSpec::Relu);
            }
            Stage::MaxPool(s) => layers.push(LayerSpec::MaxPool { ph: s, pw: s }),
            Stage::AvgPool(s) => layers.push(LayerSpec::AvgPool { ph: s, pw: s }),
        }
    }
    for &width in fc_widths {
        layers.push(LayerSpec::Fc { width });
        layers.push(LayerSpec::Relu);
    }
    layers.push(LayerSpec::Fc { width: classes });
    layers.push(LayerSpec::SoftmaxOutput { classes });
    ModelSpec {
        name,
        input: (1, m, m),
        layers,
    }
}

#[derive(Clone, Copy)]
enum Stage {
    Conv { k: usize, out: usize },
    MaxPool(usize),
    AvgPool(usize),
}

/// Finds the lexicographically smallest per-conv padding assignment that
/// makes the stack feasible on an MxM input. Padding never exceeds
/// `(k - 1) / 2` per conv, so a layer cannot grow its input.
fn search_paddings(
    name: &str,
    m: usize,
    stages: &[Stage],
    fc_widths: &[usize],
    classes: usize,
) -> Result<Vec<usize>> {
    let radix: Vec<usize> = stages
        .iter()
        .filter_map(|s| match s {
            Stage::Conv { k, .. } => Some((k - 1) / 2 + 1),
            _ => None,
        })
        .collect();
    let combos: usize = radix.iter().product();
    for combo in 0..combos {
        let mut digits = vec![0usize; radix.len()];
        let mut rest = combo;
        // Counting with the last conv as the least significant digit keeps
        // the enumeration lexicographic over (p1, p2, ...).
        for (d, r) in digits.iter_mut().zip(&radix).rev() {
            *d = rest % r;
            rest /= r;
        }
        let candidate = assemble(String::new(), m, stages, &digits, fc_widths, classes);
        if candidate.shape_trace().is_ok() {
            return Ok(digits);
        }
    }
    Err(Error::ModelSpec(format!(
        "{name}: no feasible padding assignment for input {m}x{m}"
    )))
}

const ALEXNET_WIDTHS: [usize; 5] = [96, 256, 384, 384, 256];
const WEN_WIDTHS: [usize; 4] = [32, 64, 128, 256];

fn alexnet_stages(div: usize) -> Vec<Stage> {
    let w = |i: usize| ALEXNET_WIDTHS[i] / div;
    vec![
        Stage::Conv { k: 5, out: w(0) },
        Stage::MaxPool(2),
        Stage::Conv { k: 3, out: w(1) },
        Stage::MaxPool(2),
        Stage::Conv { k: 3, out: w(2) },
        Stage::MaxPool(2),
        Stage::Conv { k: 3, out: w(3) },
        Stage::Conv { k: 3, out: w(4) },
        Stage::MaxPool(2),
    ]
}

/// The AlexNet-derived preset: five convolutions, four 2x2 maxpools, then one
/// or two hidden fully connected layers and the classifier head.
pub fn alexnet_mod(m: usize, fc1: usize, fc2: Option<usize>, classes: usize) -> Result<ModelSpec> {
    alexnet_mod_scaled(m, 1, fc1, fc2, classes)
}

/// Same stack with every conv width divided by `conv_div` (for desk-scale
/// runs).
pub fn alexnet_mod_scaled(
    m: usize,
    conv_div: usize,
    fc1: usize,
    fc2: Option<usize>,
    classes: usize,
) -> Result<ModelSpec> {
    if conv_div == 0 || ALEXNET_WIDTHS.iter().any(|&w| w / conv_div == 0) {
        return Err(Error::ModelSpec(format!("bad conv divisor {conv_div}")));
    }
    let stages = alexnet_stages(conv_div);
    let name = model_name("CNN", fc1, fc2);
    let fc: Vec<usize> = std::iter::once(fc1).chain(fc2).collect();
    let paddings = search_paddings(&name, m, &stages, &fc, classes)?;
    let spec = assemble(name, m, &stages, &paddings, &fc, classes);
    spec.shape_trace()?;
    Ok(spec)
}

/// The classic LeNet-5 stack (average pooling, fixed 120/84/10 head).
pub fn lenet5(m: usize) -> Result<ModelSpec> {
    let stages = [
        Stage::Conv { k: 5, out: 6 },
        Stage::AvgPool(2),
        Stage::Conv { k: 5, out: 16 },
        Stage::AvgPool(2),
    ];
    let spec = assemble(
        "LeNet-5".into(),
        m,
        &stages,
        &[0, 0],
        &[120, 84],
        10,
    );
    spec.shape_trace()?;
    Ok(spec)
}

/// The four-conv LeNet-5 variant used for comparison runs.
pub fn lenet5_wen(m: usize, fc1: usize, fc2: Option<usize>, classes: usize) -> Result<ModelSpec> {
    let stages: Vec<Stage> = WEN_WIDTHS
        .iter()
        .enumerate()
        .flat_map(|(i, &out)| {
            let k = if i == 0 { 5 } else { 3 };
            [Stage::Conv { k, out }, Stage::MaxPool(2)]
        })
        .collect();
    let name = model_name("LeNet5", fc1, fc2);
    let fc: Vec<usize> = std::iter::once(fc1).chain(fc2).collect();
    let paddings = search_paddings(&name, m, &stages, &fc, classes)?;
    let spec = assemble(name, m, &stages, &paddings, &fc, classes);
    spec.shape_trace()?;
    Ok(spec)
}

/// Preset lookup by the names used in config files.
pub fn preset(
    name: &str,
    m: usize,
    conv_div: usize,
    fc1: usize,
    fc2: Option<usize>,
    classes: usize,
) -> Result<ModelSpec> {
    match name {
        "alexnet-mod" => alexnet_mod_scaled(m, conv_div, fc1, fc2, classes),
        "lenet5" => lenet5(m),
        "lenet5-wen" => lenet5_wen(m, fc1, fc2, classes),
        other => Err(Error::ModelSpec(format!("unknown preset {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spatial_dims(trace: &[ValueShape]) -> Vec<usize> {
        trace
            .iter()
            .filter_map(|s| match s {
                ValueShape::Spatial { h, .. } => Some(*h),
                ValueShape::Flat { .. } => None,
            })
            .collect()
    }

    #[test]
    fn alexnet_mod_skeleton_matches_table() {
        let spec = alexnet_mod(64, 2560, Some(256), 7).unwrap();
        assert_eq!(spec.name, "CNN-2560-256");
        let skeleton = spec.skeleton();
        let expected = [
            LayerSpec::Conv { kh: 5, kw: 5, out_channels: 96, padding: 0 },
            LayerSpec::MaxPool { ph: 2, pw: 2 },
            LayerSpec::Conv { kh: 3, kw: 3, out_channels: 256, padding: 0 },
            LayerSpec::MaxPool { ph: 2, pw: 2 },
            LayerSpec::Conv { kh: 3, kw: 3, out_channels: 384, padding: 0 },
            LayerSpec::MaxPool { ph: 2, pw: 2 },
            LayerSpec::Conv { kh: 3, kw: 3, out_channels: 384, padding: 0 },
            LayerSpec::Conv { kh: 3, kw: 3, out_channels: 256, padding: 0 },
            LayerSpec::MaxPool { ph: 2, pw: 2 },
            LayerSpec::Fc { width: 2560 },
            LayerSpec::Fc { width: 256 },
            LayerSpec::Fc { width: 7 },
        ];
        assert_eq!(skeleton, expected);
    }

    #[test]
    fn alexnet_mod_shape_trace_on_64() {
        let spec = alexnet_mod(64, 2560, Some(256), 7).unwrap();
        let trace = spec.shape_trace().unwrap();
        // 64 -> 60 -> 30 -> 28 -> 14 -> 12 -> 6 -> 4 -> 2 -> 1, relus repeat
        // the conv output size.
        assert_eq!(
            spatial_dims(&trace),
            vec![60, 60, 30, 28, 28, 14, 12, 12, 6, 4, 4, 2, 2, 1]
        );
        // Final spatial stage is 256 x 1 x 1.
        let last_spatial = trace
            .iter()
            .rev()
            .find_map(|s| match s {
                ValueShape::Spatial { c, h, w } => Some((*c, *h, *w)),
                _ => None,
            })
            .unwrap();
        assert_eq!(last_spatial, (256, 1, 1));
    }

    #[test]
    fn alexnet_single_fc_variant() {
        let spec = alexnet_mod(64, 512, None, 7).unwrap();
        assert_eq!(spec.name, "CNN-512");
        let fc_widths: Vec<usize> = spec
            .skeleton()
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Fc { width } => Some(*width),
                _ => None,
            })
            .collect();
        assert_eq!(fc_widths, vec![512, 7]);
    }

    #[test]
    fn alexnet_reduced_fits_32() {
        let spec = alexnet_mod_scaled(32, 4, 256, Some(64), 7).unwrap();
        let convs: Vec<(usize, usize)> = spec
            .layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Conv {
                    out_channels,
                    padding,
                    ..
                } => Some((*out_channels, *padding)),
                _ => None,
            })
            .collect();
        assert_eq!(
            convs,
            vec![(24, 0), (64, 0), (96, 0), (96, 1), (64, 1)]
        );
        spec.shape_trace().unwrap();
    }

    #[test]
    fn lenet5_matches_table() {
        let spec = lenet5(32).unwrap();
        let expected = [
            LayerSpec::Conv { kh: 5, kw: 5, out_channels: 6, padding: 0 },
            LayerSpec::AvgPool { ph: 2, pw: 2 },
            LayerSpec::Conv { kh: 5, kw: 5, out_channels: 16, padding: 0 },
            LayerSpec::AvgPool { ph: 2, pw: 2 },
            LayerSpec::Fc { width: 120 },
            LayerSpec::Fc { width: 84 },
            LayerSpec::Fc { width: 10 },
        ];
        assert_eq!(spec.skeleton(), expected);
        assert_eq!(spatial_dims(&spec.shape_trace().unwrap()), vec![28, 28, 14, 10, 10, 5]);
    }

    #[test]
    fn lenet5_wen_matches_table() {
        let spec = lenet5_wen(64, 2560, Some(512), 7).unwrap();
        assert_eq!(spec.name, "LeNet5-2560-512");
        let expected = [
            LayerSpec::Conv { kh: 5, kw: 5, out_channels: 32, padding: 0 },
            LayerSpec::MaxPool { ph: 2, pw: 2 },
            LayerSpec::Conv { kh: 3, kw: 3, out_channels: 64, padding: 0 },
            LayerSpec::MaxPool { ph: 2, pw: 2 },
            LayerSpec::Conv { kh: 3, kw: 3, out_channels: 128, padding: 0 },
            LayerSpec::MaxPool { ph: 2, pw: 2 },
            LayerSpec::Conv { kh: 3, kw: 3, out_channels: 256, padding: 0 },
            LayerSpec::MaxPool { ph: 2, pw: 2 },
            LayerSpec::Fc { width: 2560 },
            LayerSpec::Fc { width: 512 },
            LayerSpec::Fc { width: 7 },
        ];
        assert_eq!(spec.skeleton(), expected);
    }

    #[test]
    fn softmax_must_be_last_and_unique() {
        let mut spec = alexnet_mod(64, 512, None, 7).unwrap();
        spec.layers.push(LayerSpec::Relu);
        assert!(spec.shape_trace().is_err());
        let mut spec2 = alexnet_mod(64, 512, None, 7).unwrap();
        spec2.layers.pop();
        assert!(spec2.shape_trace().is_err());
    }

    #[test]
    fn rejects_infeasible_input() {
        // 8x8 cannot survive four 2x2 pools plus convs at any padding <= 2.
        assert!(alexnet_mod(8, 64, None, 7).is_err());
        assert!(preset("nope", 64, 1, 1, None, 7).is_err());
    }
}
