//! Two-hidden-layer tanh network with a Gaussian policy head and a scalar
//! value head sharing one trunk.
//!
//! All parameters live in one flat vector, laid out as
//! `W1 (h1×in), b1, W2 (h2×h1), b2, Wμ (out×h2), bμ, log_std (out), Wv (1×h2), bv`
//! with row-major weight matrices. Gradients use the same layout.

use std::ops::Range;

use rand::Rng;

use super::AgentError;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    sizes: [usize; 4],
    data: Vec<f64>,
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone)]
struct Layout {
    w1: Range<usize>,
    b1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
    wm: Range<usize>,
    bm: Range<usize>,
    log_std: Range<usize>,
    wv: Range<usize>,
    bv: Range<usize>,
}

impl Layout {
    fn new([inp, h1, h2, out]: [usize; 4]) -> Self {
        let mut at = 0;
        let mut next = |len: usize| {
            let r = at..at + len;
            at += len;
            r
        };
        Layout {
            w1: next(h1 * inp),
            b1: next(h1),
            w2: next(h2 * h1),
            b2: next(h2),
            wm: next(out * h2),
            bm: next(out),
            log_std: next(out),
            wv: next(h2),
            bv: next(1),
        }
    }

    fn total(&self) -> usize {
        self.bv.end
    }
}

pub const TENSOR_NAMES: [&str; 9] = ["w1", "b1", "w2", "b2", "w_mean", "b_mean", "log_std", "w_value", "b_value"];

impl MlpParams {
    /// All-zero parameters for layer sizes `[in, h1, h2, out]`.
    pub fn zeros(sizes: [usize; 4]) -> Self {
        MlpParams { sizes, data: vec![0.0; Layout::new(sizes).total()] }
    }

    /// Uniform(±1/√fan_in) trunk weights, a 100× smaller mean head so initial
    /// actions sit near zero, zero biases, and a constant `log_std_init`.
    pub fn init(sizes: [usize; 4], log_std_init: f64, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(sizes);
        let l = Layout::new(sizes);
        let [inp, h1, h2, _] = sizes;
        let mut fill = |r: Range<usize>, fan_in: usize, gain: f64, data: &mut [f64]| {
            let bound = gain / (fan_in as f64).sqrt();
            for v in &mut data[r] {
                *v = rng.random_range(-bound..bound);
            }
        };
        fill(l.w1.clone(), inp, 1.0, &mut p.data);
        fill(l.w2.clone(), h1, 1.0, &mut p.data);
        fill(l.wm.clone(), h2, 0.01, &mut p.data);
        fill(l.wv.clone(), h2, 1.0, &mut p.data);
        p.data[l.log_std].fill(log_std_init);
        p
    }

    /// Rebuilds from a flat vector in the documented layout.
    pub fn from_flat(sizes: [usize; 4], data: Vec<f64>) -> Result<Self, AgentError> {
        let expected = Layout::new(sizes).total();
        if data.len() != expected {
            return Err(AgentError::ShapeMismatch { expected, got: data.len() });
        }
        Ok(MlpParams { sizes, data })
    }

    pub fn sizes(&self) -> [usize; 4] {
        self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        self.sizes[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `(name, range)` of every tensor in the flat vector.
    pub fn tensors(&self) -> [(&'static str, Range<usize>); 9] {
        let l = Layout::new(self.sizes);
        let ranges = [l.w1, l.b1, l.w2, l.b2, l.wm, l.bm, l.log_std, l.wv, l.bv];
        let mut it = TENSOR_NAMES.into_iter().zip(ranges);
        std::array::from_fn(|_| it.next().unwrap())
    }

    pub fn log_std(&self) -> &[f64] {
        &self.data[Layout::new(self.sizes).log_std]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Forward-pass outputs plus the activations backprop needs.
#[derive(Debug, Clone)]
pub struct Forward {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value: f64,
    input: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

/// `out = b + W·x` for row-major `W` of shape `(b.len(), x.len())`.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(b.iter().enumerate().map(|(j, bj)| {
        let row = &w[j * x.len()..(j + 1) * x.len()];
        bj + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }));
}

pub fn mlp_forward(params: &MlpParams, observation: &[f64]) -> Result<Forward, AgentError> {
    if observation.len() != params.input_len() {
        return Err(AgentError::ShapeMismatch { expected: params.input_len(), got: observation.len() });
    }
    let l = Layout::new(params.sizes);
    let d = &params.data;
    let mut h1 = Vec::new();
    affine(&d[l.w1], &d[l.b1], observation, &mut h1);
    h1.iter_mut().for_each(|v| *v = v.tanh());
    let mut h2 = Vec::new();
    affine(&d[l.w2], &d[l.b2], &h1, &mut h2);
    h2.iter_mut().for_each(|v| *v = v.tanh());
    let mut mean = Vec::new();
    affine(&d[l.wm], &d[l.bm], &h2, &mut mean);
    mean.iter_mut().for_each(|v| *v = v.tanh());
    let mut value = Vec::new();
    affine(&d[l.wv], &d[l.bv], &h2, &mut value);
    Ok(Forward { mean, log_std: d[l.log_std].to_vec(), value: value[0], input: observation.to_vec(), h1, h2 })
}

/// Upstream gradients of a scalar loss with respect to the network outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrads {
    /// d loss / d mean (after the tanh squash).
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value: f64,
}

impl HeadGrads {
    pub fn zeros(out: usize) -> Self {
        HeadGrads { mean: vec![0.0; out], log_std: vec![0.0; out], value: 0.0 }
    }
}

/// Reverse-mode gradient with respect to every parameter, accumulated into
/// `grad` (flat, same layout as the parameters).
pub fn mlp_backward(params: &MlpParams, fwd: &Forward, upstream: &HeadGrads, grad: &mut [f64]) -> Result<(), AgentError> {
    let [inp, h1n, h2n, out] = params.sizes;
    if grad.len() != params.len() {
        return Err(AgentError::ShapeMismatch { expected: params.len(), got: grad.len() });
    }
    if upstream.mean.len() != out || upstream.log_std.len() != out {
        return Err(AgentError::ShapeMismatch { expected: out, got: upstream.mean.len() });
    }
    if fwd.input.len() != inp || fwd.h1.len() != h1n || fwd.h2.len() != h2n {
        return Err(AgentError::ShapeMismatch { expected: inp, got: fwd.input.len() });
    }
    let l = Layout::new(params.sizes);
    let d = &params.data;

    let mut dh2 = vec![0.0; h2n];
    for j in 0..out {
        let dz = upstream.mean[j] * (1.0 - fwd.mean[j] * fwd.mean[j]);
        grad[l.bm.start + j] += dz;
        for k in 0..h2n {
            grad[l.wm.start + j * h2n + k] += dz * fwd.h2[k];
            dh2[k] += dz * d[l.wm.start + j * h2n + k];
        }
        grad[l.log_std.start + j] += upstream.log_std[j];
    }
    grad[l.bv.start] += upstream.value;
    for k in 0..h2n {
        grad[l.wv.start + k] += upstream.value * fwd.h2[k];
        dh2[k] += upstream.value * d[l.wv.start + k];
    }

    let mut dh1 = vec![0.0; h1n];
    for j in 0..h2n {
        let dz = dh2[j] * (1.0 - fwd.h2[j] * fwd.h2[j]);
        grad[l.b2.start + j] += dz;
        for k in 0..h1n {
            grad[l.w2.start + j * h1n + k] += dz * fwd.h1[k];
            dh1[k] += dz * d[l.w2.start + j * h1n + k];
        }
    }
    for j in 0..h1n {
        let dz = dh1[j] * (1.0 - fwd.h1[j] * fwd.h1[j]);
        grad[l.b1.start + j] += dz;
        for k in 0..inp {
            grad[l.w1.start + j * inp + k] += dz * fwd.input[k];
        }
    }
    Ok(())
}
