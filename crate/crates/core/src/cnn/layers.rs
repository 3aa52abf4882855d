//! Forward and backward passes for the five layer kinds.
//!
//! Accumulation orders are fixed so results are reproducible everywhere:
//! every convolution output element starts from its bias and adds taps in
//! (in_channel, ky, kx) order; fully connected outputs accumulate over the
//! input index in order; batch reductions always run in sample-index order
//! even when samples are processed in parallel. Out-of-bounds (padding) taps
//! are skipped, not added as zeros.

use rayon::prelude::*;

use crate::cnn::tensor::{Matrix, Tensor4};
use crate::error::{Error, Result};

fn out_dim(size: usize, k: usize, stride: usize, padding: usize) -> Result<usize> {
    let padded = size + 2 * padding;
    if k == 0 || stride == 0 {
        return Err(Error::Shape("kernel and stride must be >= 1".into()));
    }
    if k > padded {
        return Err(Error::Shape(format!(
            "kernel {k} larger than padded input {padded}"
        )));
    }
    if (padded - k) % stride != 0 {
        return Err(Error::Shape(format!(
            "stride {stride} does not divide padded span {}",
            padded - k
        )));
    }
    Ok((padded - k) / stride + 1)
}

/// Dot product with eight running lanes; fixed association for a given
/// length, fast on wide FP units.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (xa, xb) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for l in 0..8 {
            lanes[l] += xa[l] * xb[l];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    lanes.iter().sum::<f64>() + tail
}

fn sum8(a: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let x = &a[i * 8..i * 8 + 8];
        for l in 0..8 {
            lanes[l] += x[l];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i];
    }
    lanes.iter().sum::<f64>() + tail
}

struct ConvDims {
    ic: usize,
    h: usize,
    w: usize,
    oc: usize,
    oh: usize,
    ow: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    padding: usize,
}

impl ConvDims {
    /// For a given (ky, kx), the output-x range whose input column stays in
    /// bounds, and the matching first input column.
    fn ox_span(&self, kx: usize) -> Option<(usize, usize, usize)> {
        if self.stride != 1 {
            return None;
        }
        let lo = self.padding.saturating_sub(kx);
        let hi = (self.w + self.padding).saturating_sub(kx).min(self.ow);
        if lo >= hi {
            return Some((0, 0, 0));
        }
        Some((lo, hi, lo + kx - self.padding))
    }

    fn in_row(&self, oy: usize, ky: usize) -> Option<usize> {
        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
        if iy < 0 || iy >= self.h as isize {
            None
        } else {
            Some(iy as usize)
        }
    }
}

/// Cross-correlation plus bias. `weights` has shape
/// (out_channels, in_channels, kh, kw).
pub fn conv2d_forward(
    input: &Tensor4,
    weights: &Tensor4,
    bias: &[f64],
    stride: usize,
    padding: usize,
) -> Result<Tensor4> {
    let (n, ic, h, w) = input.shape();
    let (oc, wic, kh, kw) = weights.shape();
    if wic != ic {
        return Err(Error::Shape(format!(
            "conv weights expect {wic} input channels, input has {ic}"
        )));
    }
    if bias.len() != oc {
        return Err(Error::Shape(format!(
            "conv bias length {} != {oc} output channels",
            bias.len()
        )));
    }
    let oh = out_dim(h, kh, stride, padding)?;
    let ow = out_dim(w, kw, stride, padding)?;
    let dims = ConvDims {
        ic,
        h,
        w,
        oc,
        oh,
        ow,
        kh,
        kw,
        stride,
        padding,
    };
    let mut out = Tensor4::zeros(n, oc, oh, ow);
    let in_len = input.sample_len();
    let out_len = oc * oh * ow;
    out.data
        .par_chunks_mut(out_len)
        .zip(input.data.par_chunks(in_len))
        .for_each(|(out_s, in_s)| forward_sample(out_s, in_s, &weights.data, bias, &dims));
    Ok(out)
}

fn forward_sample(out_s: &mut [f64], in_s: &[f64], weights: &[f64], bias: &[f64], d: &ConvDims) {
    let plane = d.oh * d.ow;
    for o in 0..d.oc {
        out_s[o * plane..(o + 1) * plane].fill(bias[o]);
    }
    for o in 0..d.oc {
        let out_plane = &mut out_s[o * plane..(o + 1) * plane];
        for icx in 0..d.ic {
            let in_plane = &in_s[icx * d.h * d.w..(icx + 1) * d.h * d.w];
            for ky in 0..d.kh {
                for kx in 0..d.kw {
                    let wv = weights[((o * d.ic + icx) * d.kh + ky) * d.kw + kx];
                    match d.ox_span(kx) {
                        Some((lo, hi, _)) if lo >= hi => {}
                        Some((lo, hi, ix0)) => {
                            for oy in 0..d.oh {
                                let Some(iy) = d.in_row(oy, ky) else { continue };
                                let out_row = &mut out_plane[oy * d.ow + lo..oy * d.ow + hi];
                                let in_row = &in_plane[iy * d.w + ix0..iy * d.w + ix0 + (hi - lo)];
                                for (ov, iv) in out_row.iter_mut().zip(in_row) {
                                    *ov += wv * iv;
                                }
                            }
                        }
                        None => {
                            // General stride: scalar taps.
                            for oy in 0..d.oh {
                                let Some(iy) = d.in_row(oy, ky) else { continue };
                                for ox in 0..d.ow {
                                    let ix = (ox * d.stride + kx) as isize - d.padding as isize;
                                    if ix < 0 || ix >= d.w as isize {
                                        continue;
                                    }
                                    out_plane[oy * d.ow + ox] +=
                                        wv * in_plane[iy * d.w + ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Exact gradients of [`conv2d_forward`] with respect to input, weights and
/// bias. Set `need_grad_input` to false for the first layer to skip the
/// input-gradient pass.
pub fn conv2d_backward(
    grad_out: &Tensor4,
    input: &Tensor4,
    weights: &Tensor4,
    stride: usize,
    padding: usize,
    need_grad_input: bool,
) -> Result<(Tensor4, Tensor4, Vec<f64>)> {
    let (n, ic, h, w) = input.shape();
    let (oc, wic, kh, kw) = weights.shape();
    if wic != ic {
        return Err(Error::Shape("conv backward: channel mismatch".into()));
    }
    let oh = out_dim(h, kh, stride, padding)?;
    let ow = out_dim(w, kw, stride, padding)?;
    if grad_out.shape() != (n, oc, oh, ow) {
        return Err(Error::Shape(format!(
            "conv backward: upstream gradient shape {:?} != {:?}",
            grad_out.shape(),
            (n, oc, oh, ow)
        )));
    }
    let dims = ConvDims {
        ic,
        h,
        w,
        oc,
        oh,
        ow,
        kh,
        kw,
        stride,
        padding,
    };

    let in_len = input.sample_len();
    let go_len = oc * oh * ow;
    let wlen = weights.data.len();

    // Per-sample partials, reduced in sample order below.
    let partials: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|s| {
            let in_s = &input.data[s * in_len..(s + 1) * in_len];
            let go_s = &grad_out.data[s * go_len..(s + 1) * go_len];
            let mut gw = vec![0.0f64; wlen];
            let mut gb = vec![0.0f64; oc];
            let gi = backward_sample(
                go_s,
                in_s,
                &weights.data,
                &mut gw,
                &mut gb,
                &dims,
                need_grad_input,
            );
            (gi, gw, gb)
        })
        .collect();

    let mut grad_input = Tensor4::zeros(n, ic, h, w);
    let mut grad_weights = Tensor4 {
        n: oc,
        c: ic,
        h: kh,
        w: kw,
        data: vec![0.0; wlen],
    };
    let mut grad_bias = vec![0.0f64; oc];
    for (s, (gi, gw, gb)) in partials.into_iter().enumerate() {
        if need_grad_input {
            grad_input.data[s * in_len..(s + 1) * in_len].copy_from_slice(&gi);
        }
        for (acc, v) in grad_weights.data.iter_mut().zip(&gw) {
            *acc += v;
        }
        for (acc, v) in grad_bias.iter_mut().zip(&gb) {
            *acc += v;
        }
    }
    Ok((grad_input, grad_weights, grad_bias))
}

fn backward_sample(
    go_s: &[f64],
    in_s: &[f64],
    weights: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    d: &ConvDims,
    need_grad_input: bool,
) -> Vec<f64> {
    let plane = d.oh * d.ow;
    let mut gi = if need_grad_input {
        vec![0.0f64; d.ic * d.h * d.w]
    } else {
        Vec::new()
    };
    for o in 0..d.oc {
        let go_plane = &go_s[o * plane..(o + 1) * plane];
        gb[o] += sum8(go_plane);
        for icx in 0..d.ic {
            let in_plane = &in_s[icx * d.h * d.w..(icx + 1) * d.h * d.w];
            for ky in 0..d.kh {
                for kx in 0..d.kw {
                    let widx = ((o * d.ic + icx) * d.kh + ky) * d.kw + kx;
                    let wv = weights[widx];
                    let mut wacc = 0.0f64;
                    match d.ox_span(kx) {
                        Some((lo, hi, _)) if lo >= hi => {}
                        Some((lo, hi, ix0)) => {
                            for oy in 0..d.oh {
                                let Some(iy) = d.in_row(oy, ky) else { continue };
                                let go_row = &go_plane[oy * d.ow + lo..oy * d.ow + hi];
                                let span = hi - lo;
                                let in_row = &in_plane[iy * d.w + ix0..iy * d.w + ix0 + span];
                                wacc += dot(go_row, in_row);
                                if need_grad_input {
                                    let gi_plane = &mut gi[icx * d.h * d.w..];
                                    let gi_row =
                                        &mut gi_plane[iy * d.w + ix0..iy * d.w + ix0 + span];
                                    for (g, go) in gi_row.iter_mut().zip(go_row) {
                                        *g += wv * go;
                                    }
                                }
                            }
                        }
                        None => {
                            for oy in 0..d.oh {
                                let Some(iy) = d.in_row(oy, ky) else { continue };
                                for ox in 0..d.ow {
                                    let ix =
                                        (ox * d.stride + kx) as isize - d.padding as isize;
                                    if ix < 0 || ix >= d.w as isize {
                                        continue;
                                    }
                                    let ix = ix as usize;
                                    let g = go_plane[oy * d.ow + ox];
                                    wacc += g * in_plane[iy * d.w + ix];
                                    if need_grad_input {
                                        gi[icx * d.h * d.w + iy * d.w + ix] += wv * g;
                                    }
                                }
                            }
                        }
                    }
                    gw[widx] += wacc;
                }
            }
        }
    }
    gi
}

/// Windowed max with stride equal to the pool size; spatial dims must divide
/// evenly. Returns the pooled tensor and, per output element, the flat index
/// of its source element within the input (ties to the first in row-major
/// scan order).
pub fn maxpool_forward(input: &Tensor4, ph: usize, pw: usize) -> Result<(Tensor4, Vec<usize>)> {
    let (n, c, h, w) = input.shape();
    if ph == 0 || pw == 0 || h % ph != 0 || w % pw != 0 {
        return Err(Error::Shape(format!(
            "pool {ph}x{pw} does not divide input {h}x{w}"
        )));
    }
    let (oh, ow) = (h / ph, w / pw);
    let mut out = Tensor4::zeros(n, c, oh, ow);
    let mut argmax = vec![0usize; n * c * oh * ow];
    for s in 0..n {
        for ch in 0..c {
            let in_plane = &input.data[(s * c + ch) * h * w..(s * c + ch + 1) * h * w];
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0usize;
                    for py in 0..ph {
                        for px in 0..pw {
                            let idx = (oy * ph + py) * w + ox * pw + px;
                            if in_plane[idx] > best {
                                best = in_plane[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let o_idx = ((s * c + ch) * oh + oy) * ow + ox;
                    out.data[o_idx] = best;
                    argmax[o_idx] = (s * c + ch) * h * w + best_idx;
                }
            }
        }
    }
    Ok((out, argmax))
}

/// Routes each upstream gradient to the argmax position recorded forward.
pub fn maxpool_backward(
    grad_out: &Tensor4,
    argmax: &[usize],
    input_shape: (usize, usize, usize, usize),
) -> Result<Tensor4> {
    if grad_out.data.len() != argmax.len() {
        return Err(Error::Shape("maxpool backward: argmax length mismatch".into()));
    }
    let (n, c, h, w) = input_shape;
    let mut grad_input = Tensor4::zeros(n, c, h, w);
    for (g, &idx) in grad_out.data.iter().zip(argmax) {
        grad_input.data[idx] += g;
    }
    Ok(grad_input)
}

/// Windowed mean with stride equal to the pool size.
pub fn avgpool_forward(input: &Tensor4, ph: usize, pw: usize) -> Result<Tensor4> {
    let (n, c, h, w) = input.shape();
    if ph == 0 || pw == 0 || h % ph != 0 || w % pw != 0 {
        return Err(Error::Shape(format!(
            "pool {ph}x{pw} does not divide input {h}x{w}"
        )));
    }
    let (oh, ow) = (h / ph, w / pw);
    let inv = 1.0 / (ph * pw) as f64;
    let mut out = Tensor4::zeros(n, c, oh, ow);
    for s in 0..n {
        for ch in 0..c {
            let in_plane = &input.data[(s * c + ch) * h * w..(s * c + ch + 1) * h * w];
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0.0;
                    for py in 0..ph {
                        for px in 0..pw {
                            acc += in_plane[(oy * ph + py) * w + ox * pw + px];
                        }
                    }
                    out.data[((s * c + ch) * oh + oy) * ow + ox] = acc * inv;
                }
            }
        }
    }
    Ok(out)
}

/// Distributes each upstream gradient evenly over its window.
pub fn avgpool_backward(
    grad_out: &Tensor4,
    ph: usize,
    pw: usize,
    input_shape: (usize, usize, usize, usize),
) -> Result<Tensor4> {
    let (n, c, h, w) = input_shape;
    let (oh, ow) = (h / ph, w / pw);
    if grad_out.shape() != (n, c, oh, ow) {
        return Err(Error::Shape("avgpool backward: shape mismatch".into()));
    }
    let inv = 1.0 / (ph * pw) as f64;
    let mut grad_input = Tensor4::zeros(n, c, h, w);
    for s in 0..n {
        for ch in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let g = grad_out.data[((s * c + ch) * oh + oy) * ow + ox] * inv;
                    for py in 0..ph {
                        for px in 0..pw {
                            grad_input.data
                                [(s * c + ch) * h * w + (oy * ph + py) * w + ox * pw + px] += g;
                        }
                    }
                }
            }
        }
    }
    Ok(grad_input)
}

pub fn relu_forward_tensor(input: &Tensor4) -> Tensor4 {
    Tensor4 {
        n: input.n,
        c: input.c,
        h: input.h,
        w: input.w,
        data: input.data.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
    }
}

pub fn relu_backward_tensor(grad_out: &Tensor4, input: &Tensor4) -> Result<Tensor4> {
    if grad_out.shape() != input.shape() {
        return Err(Error::Shape("relu backward: shape mismatch".into()));
    }
    Ok(Tensor4 {
        n: input.n,
        c: input.c,
        h: input.h,
        w: input.w,
        data: grad_out
            .data
            .iter()
            .zip(&input.data)
            .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
            .collect(),
    })
}

pub fn relu_forward_matrix(input: &Matrix) -> Matrix {
    Matrix {
        rows: input.rows,
        cols: input.cols,
        data: input.data.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
    }
}

pub fn relu_backward_matrix(grad_out: &Matrix, input: &Matrix) -> Result<Matrix> {
    if (grad_out.rows, grad_out.cols) != (input.rows, input.cols) {
        return Err(Error::Shape("relu backward: shape mismatch".into()));
    }
    Ok(Matrix {
        rows: input.rows,
        cols: input.cols,
        data: grad_out
            .data
            .iter()
            .zip(&input.data)
            .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
            .collect(),
    })
}

/// Affine map `y = W x + b`; `weights` is (out, in) row-major. Accumulates
/// over the input index in order.
pub fn fc_forward(input: &Matrix, weights: &Matrix, bias: &[f64]) -> Result<Matrix> {
    let (out_dim, in_dim) = (weights.rows, weights.cols);
    if input.cols != in_dim {
        return Err(Error::Shape(format!(
            "fc: input width {} != weight width {in_dim}",
            input.cols
        )));
    }
    if bias.len() != out_dim {
        return Err(Error::Shape("fc: bias length mismatch".into()));
    }
    let mut out = Matrix::zeros(input.rows, out_dim);
    for r in 0..input.rows {
        let x = input.row(r);
        let y = out.row_mut(r);
        for (o, yo) in y.iter_mut().enumerate() {
            let wrow = weights.row(o);
            let mut acc = bias[o];
            for (wv, xv) in wrow.iter().zip(x) {
                acc += wv * xv;
            }
            *yo = acc;
        }
    }
    Ok(out)
}

/// Gradients of [`fc_forward`]: input, weights, bias. Batch reduction runs in
/// sample order.
pub fn fc_backward(
    grad_out: &Matrix,
    input: &Matrix,
    weights: &Matrix,
) -> Result<(Matrix, Matrix, Vec<f64>)> {
    let (out_dim, in_dim) = (weights.rows, weights.cols);
    if grad_out.cols != out_dim || input.cols != in_dim || grad_out.rows != input.rows {
        return Err(Error::Shape("fc backward: shape mismatch".into()));
    }
    let mut grad_input = Matrix::zeros(input.rows, in_dim);
    let mut grad_weights = Matrix::zeros(out_dim, in_dim);
    let mut grad_bias = vec![0.0f64; out_dim];
    for r in 0..input.rows {
        let go = grad_out.row(r);
        let x = input.row(r);
        let gx = grad_input.row_mut(r);
        for (o, &g) in go.iter().enumerate() {
            grad_bias[o] += g;
            let wrow = weights.row(o);
            for (gxi, wv) in gx.iter_mut().zip(wrow) {
                *gxi += g * wv;
            }
            let gwrow = grad_weights.row_mut(o);
            for (gw, xv) in gwrow.iter_mut().zip(x) {
                *gw += g * xv;
            }
        }
    }
    Ok((grad_input, grad_weights, grad_bias))
}

/// Row-wise softmax probabilities with log-sum-exp stabilization.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(logits.rows, logits.cols);
    for r in 0..logits.rows {
        let row = logits.row(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dst = out.row_mut(r);
        let mut sum = 0.0;
        for (d, &l) in dst.iter_mut().zip(row) {
            *d = (l - m).exp();
            sum += *d;
        }
        for d in dst.iter_mut() {
            *d /= sum;
        }
    }
    out
}

/// Mean cross-entropy over the batch and its gradient with respect to the
/// logits: `(softmax - onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if labels.len() != logits.rows {
        return Err(Error::MetricLength {
            predictions: logits.rows,
            labels: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= logits.cols) {
        return Err(Error::ClassRange {
            value: bad,
            k: logits.cols,
        });
    }
    let batch = logits.rows as f64;
    let mut grad = softmax(logits);
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|&l| (l - m).exp()).sum::<f64>().ln();
        loss += lse - row[label];
        grad.row_mut(r)[label] -= 1.0;
    }
    for g in grad.data.iter_mut() {
        *g /= batch;
    }
    Ok((loss / batch, grad))
}
