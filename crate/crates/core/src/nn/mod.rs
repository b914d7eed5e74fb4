//! A small convolutional network written from scratch: same-padded 2-D
//! convolutions and dense layers lowered to GEMM, ReLU, inverted dropout, and a
//! softmax-classification or linear-regression head.
//!
//! Activations are channel-last and row-major, `batch × rows × cols × channels`.

mod gemm;
mod gradcheck;
mod io;
mod pipeline;
mod quant;
mod train;

pub use gradcheck::{gradient_check, GradCheckReport};
pub use io::{read_model, write_model, ModelFile, MODEL_FORMAT_VERSION};
pub use pipeline::{predict_pipeline, read_pipeline, write_pipeline, Pipeline};
pub use quant::{dequantize_code, quantize, QuantizationSpec};
pub use train::{
    split_indices, train, train_classifier, train_regressor, EpochMetrics, Standardizer, Target, TrainConfig, TrainReport,
};

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::InputTensor;
use crate::error::{Error, Result};
use crate::rng::{stream, SimRng};
use gemm::{gemm, MatRef};

/// Scalar type of a network: `f32` for training, `f64` for gradient checks.
pub trait Real: Float + FromPrimitive + ToPrimitive + Default + Send + Sync + Debug + Sum + 'static {
    /// Raw strided GEMM, `C ← α A B + β C`.
    ///
    /// # Safety
    /// Pointers and strides must describe valid, non-overlapping `m×k`, `k×n` and `m×n` matrices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("representable")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("representable")
    }
}

impl Real for f32 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        unsafe { matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc) }
    }
}

impl Real for f64 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        unsafe { matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Input { rows: usize, cols: usize, channels: usize },
    /// Square kernel, stride 1, same padding (the extra row/column of an even kernel goes bottom/right).
    Conv { filters: usize, kernel: usize },
    Relu,
    FullyConnected { units: usize },
    Dropout { p: f64 },
    SoftmaxClass { n_classes: usize },
    Regression { outputs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Class { n_classes: usize },
    Regress { outputs: usize },
}

impl Head {
    fn layer(self) -> LayerSpec {
        match self {
            Head::Class { n_classes } => LayerSpec::SoftmaxClass { n_classes },
            Head::Regress { outputs } => LayerSpec::Regression { outputs },
        }
    }
}

/// Widths of the canonical stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Arch {
    pub filters: usize,
    pub kernel: usize,
    pub conv_layers: usize,
    pub fc_units: usize,
    pub fc_layers: usize,
    pub dropout: f64,
}

impl Default for Arch {
    fn default() -> Self {
        Self { filters: 64, kernel: 2, conv_layers: 3, fc_units: 512, fc_layers: 2, dropout: 0.5 }
    }
}

impl LayerSpec {
    /// Input, (Conv, ReLU)×3, (FC, ReLU, Dropout)×2, head: 14 layers with the default [`Arch`].
    pub fn canonical(rows: usize, cols: usize, head: Head, arch: &Arch) -> Vec<LayerSpec> {
        let mut layers = vec![LayerSpec::Input { rows, cols, channels: 3 }];
        for _ in 0..arch.conv_layers {
            layers.push(LayerSpec::Conv { filters: arch.filters, kernel: arch.kernel });
            layers.push(LayerSpec::Relu);
        }
        for _ in 0..arch.fc_layers {
            layers.push(LayerSpec::FullyConnected { units: arch.fc_units });
            layers.push(LayerSpec::Relu);
            layers.push(LayerSpec::Dropout { p: arch.dropout });
        }
        layers.push(head.layer());
        layers
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Map { h: usize, w: usize, c: usize },
    Flat(usize),
}

impl Shape {
    fn size(self) -> usize {
        match self {
            Shape::Map { h, w, c } => h * w * c,
            Shape::Flat(n) => n,
        }
    }
}

/// Weights of one conv or dense layer: `fan_in × fan_out` row-major plus a bias per output.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl<T: Real> Param<T> {
    fn zeros_like(&self) -> Self {
        Self { weights: vec![T::zero(); self.weights.len()], bias: vec![T::zero(); self.bias.len()], ..*self }
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weights then biases.
    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.weights.iter().chain(&self.bias)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    fn get(&self, k: usize) -> T {
        if k < self.weights.len() {
            self.weights[k]
        } else {
            self.bias[k - self.weights.len()]
        }
    }

    fn get_mut(&mut self, k: usize) -> &mut T {
        let n = self.weights.len();
        if k < n {
            &mut self.weights[k]
        } else {
            &mut self.bias[k - n]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel<T> {
    pub layers: Vec<LayerSpec>,
    /// One entry per conv, dense or head layer, in layer order.
    pub params: Vec<Param<T>>,
    pub init_seed: u64,
    pub quant: Option<QuantizationSpec>,
    /// Affine map from network outputs back to label units (regression head).
    pub standardizer: Option<Standardizer>,
    shapes: Vec<Shape>,
    param_of: Vec<Option<usize>>,
}

/// Everything kept from a forward pass for the backward pass.
pub(crate) struct Trace<T> {
    batch: usize,
    /// `acts[i]` is the output of layer `i`; `acts[0]` is the input batch.
    acts: Vec<Vec<T>>,
    /// im2col matrices (conv) or scaled keep-masks (dropout in training mode).
    saved: Vec<Option<Vec<T>>>,
}

impl<T: Real> Trace<T> {
    pub fn output(&self) -> &[T] {
        self.acts.last().expect("nonempty")
    }

    /// Signs of every ReLU input; used to spot finite-difference steps that cross a kink.
    pub fn relu_pattern(&self, layers: &[LayerSpec]) -> Vec<bool> {
        layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Relu))
            .flat_map(|(i, _)| self.acts[i - 1].iter().map(|v| *v > T::zero()))
            .collect()
    }
}

fn same_pad(kernel: usize) -> usize {
    (kernel - 1) / 2
}

fn im2col<T: Real>(x: &[T], batch: usize, h: usize, w: usize, c: usize, k: usize) -> Vec<T> {
    let kk = k * k * c;
    let pad = same_pad(k) as isize;
    let mut cols = vec![T::zero(); batch * h * w * kk];
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                let row = &mut cols[((b * h + i) * w + j) * kk..][..kk];
                for di in 0..k {
                    let r = i as isize + di as isize - pad;
                    if r < 0 || r >= h as isize {
                        continue;
                    }
                    for dj in 0..k {
                        let s = j as isize + dj as isize - pad;
                        if s < 0 || s >= w as isize {
                            continue;
                        }
                        let src = ((b * h + r as usize) * w + s as usize) * c;
                        row[(di * k + dj) * c..][..c].copy_from_slice(&x[src..src + c]);
                    }
                }
            }
        }
    }
    cols
}

fn col2im<T: Real>(cols: &[T], batch: usize, h: usize, w: usize, c: usize, k: usize) -> Vec<T> {
    let kk = k * k * c;
    let pad = same_pad(k) as isize;
    let mut x = vec![T::zero(); batch * h * w * c];
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                let row = &cols[((b * h + i) * w + j) * kk..][..kk];
                for di in 0..k {
                    let r = i as isize + di as isize - pad;
                    if r < 0 || r >= h as isize {
                        continue;
                    }
                    for dj in 0..k {
                        let s = j as isize + dj as isize - pad;
                        if s < 0 || s >= w as isize {
                            continue;
                        }
                        let dst = ((b * h + r as usize) * w + s as usize) * c;
                        for (d, v) in x[dst..dst + c].iter_mut().zip(&row[(di * k + dj) * c..][..c]) {
                            *d = *d + *v;
                        }
                    }
                }
            }
        }
    }
    x
}

fn add_bias<T: Real>(y: &mut [T], bias: &[T]) {
    for row in y.chunks_exact_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v = *v + *b;
        }
    }
}

fn column_sums<T: Real>(g: &[T], cols: usize, out: &mut [T]) {
    for row in g.chunks_exact(cols) {
        for (o, v) in out.iter_mut().zip(row) {
            *o = *o + *v;
        }
    }
}

/// Numerically stable softmax in f64.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the largest entry, first one on ties.
pub(crate) fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl<T: Real> CnnModel<T> {
    /// Builds a model with Glorot-uniform weights and zero biases drawn from `init_seed`.
    pub fn new(layers: Vec<LayerSpec>, init_seed: u64) -> Result<Self> {
        let (shapes, param_of, fans) = Self::plan(&layers)?;
        let params = fans
            .iter()
            .enumerate()
            .map(|(p, &(fan_in, fan_out, glorot_in, glorot_out))| {
                let mut rng = stream(init_seed, &[p as u64]);
                let a = (6.0 / (glorot_in + glorot_out) as f64).sqrt();
                Param {
                    weights: (0..fan_in * fan_out).map(|_| T::of(rng.random_range(-a..a))).collect(),
                    bias: vec![T::zero(); fan_out],
                    fan_in,
                    fan_out,
                }
            })
            .collect();
        Ok(Self { layers, params, init_seed, quant: None, standardizer: None, shapes, param_of })
    }

    /// Canonical architecture for `rows × cols × 3` inputs.
    pub fn canonical(rows: usize, cols: usize, head: Head, arch: &Arch, init_seed: u64) -> Result<Self> {
        Self::new(LayerSpec::canonical(rows, cols, head, arch), init_seed)
    }

    /// Output shapes, parameter slots and `(fan_in, fan_out, glorot_in, glorot_out)` per parameter layer.
    #[allow(clippy::type_complexity)]
    fn plan(layers: &[LayerSpec]) -> Result<(Vec<Shape>, Vec<Option<usize>>, Vec<(usize, usize, usize, usize)>)> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        let Some(LayerSpec::Input { rows, cols, channels }) = layers.first().copied() else {
            return bad("the first layer must be an input layer".into());
        };
        if rows == 0 || cols == 0 || channels == 0 {
            return bad("input dimensions must be positive".into());
        }
        if !matches!(layers.last(), Some(LayerSpec::SoftmaxClass { .. } | LayerSpec::Regression { .. })) {
            return bad("the last layer must be a softmax or regression head".into());
        }
        let mut shapes = vec![Shape::Map { h: rows, w: cols, c: channels }];
        let mut param_of = vec![None];
        let mut fans = Vec::new();
        for (i, layer) in layers.iter().enumerate().skip(1) {
            let prev = shapes[i - 1];
            let (shape, slot) = match *layer {
                LayerSpec::Input { .. } => return bad(format!("layer {i}: input layer inside the stack")),
                LayerSpec::Conv { filters, kernel } => {
                    let Shape::Map { h, w, c } = prev else {
                        return bad(format!("layer {i}: convolution after a dense layer"));
                    };
                    if filters == 0 || kernel == 0 {
                        return bad(format!("layer {i}: empty convolution"));
                    }
                    fans.push((kernel * kernel * c, filters, kernel * kernel * c, kernel * kernel * filters));
                    (Shape::Map { h, w, c: filters }, Some(fans.len() - 1))
                }
                LayerSpec::Relu => (prev, None),
                LayerSpec::Dropout { p } => {
                    if !(0.0..1.0).contains(&p) {
                        return bad(format!("layer {i}: dropout probability {p} outside [0, 1)"));
                    }
                    (prev, None)
                }
                LayerSpec::FullyConnected { units: n }
                | LayerSpec::SoftmaxClass { n_classes: n }
                | LayerSpec::Regression { outputs: n } => {
                    if n == 0 {
                        return bad(format!("layer {i}: zero outputs"));
                    }
                    if i != layers.len() - 1 && !matches!(layer, LayerSpec::FullyConnected { .. }) {
                        return bad(format!("layer {i}: output head before the end"));
                    }
                    fans.push((prev.size(), n, prev.size(), n));
                    (Shape::Flat(n), Some(fans.len() - 1))
                }
            };
            shapes.push(shape);
            param_of.push(slot);
        }
        Ok((shapes, param_of, fans))
    }

    /// Rebuilds a model around existing parameters (deserialization, casting).
    pub fn with_params(layers: Vec<LayerSpec>, params: Vec<Param<T>>, init_seed: u64) -> Result<Self> {
        let (shapes, param_of, fans) = Self::plan(&layers)?;
        if params.len() != fans.len()
            || params.iter().zip(&fans).any(|(p, f)| {
                p.fan_in != f.0 || p.fan_out != f.1 || p.weights.len() != f.0 * f.1 || p.bias.len() != f.1
            })
        {
            return Err(Error::ShapeMismatch("parameters do not match the layer stack".into()));
        }
        Ok(Self { layers, params, init_seed, quant: None, standardizer: None, shapes, param_of })
    }

    pub fn head(&self) -> Head {
        match self.layers.last() {
            Some(LayerSpec::SoftmaxClass { n_classes }) => Head::Class { n_classes: *n_classes },
            Some(LayerSpec::Regression { outputs }) => Head::Regress { outputs: *outputs },
            _ => unreachable!("validated at construction"),
        }
    }

    pub fn input_shape(&self) -> [usize; 3] {
        match self.shapes[0] {
            Shape::Map { h, w, c } => [h, w, c],
            Shape::Flat(_) => unreachable!("input is a map"),
        }
    }

    pub fn output_len(&self) -> usize {
        self.shapes.last().expect("nonempty").size()
    }

    pub fn n_parameters(&self) -> usize {
        self.params.iter().map(Param::len).sum()
    }

    pub fn cast<U: Real>(&self) -> CnnModel<U> {
        let params = self
            .params
            .iter()
            .map(|p| Param {
                weights: p.weights.iter().map(|v| U::of(v.f64())).collect(),
                bias: p.bias.iter().map(|v| U::of(v.f64())).collect(),
                fan_in: p.fan_in,
                fan_out: p.fan_out,
            })
            .collect();
        CnnModel {
            layers: self.layers.clone(),
            params,
            init_seed: self.init_seed,
            quant: self.quant.clone(),
            standardizer: self.standardizer.clone(),
            shapes: self.shapes.clone(),
            param_of: self.param_of.clone(),
        }
    }

    pub(crate) fn input_batch(&self, xs: &[&InputTensor]) -> Result<Vec<T>> {
        let [h, w, c] = self.input_shape();
        let mut out = Vec::with_capacity(xs.len() * h * w * c);
        for x in xs {
            if x.shape() != [h, w, c] {
                return Err(Error::ShapeMismatch(format!("input is {:?}, network expects {:?}", x.shape(), [h, w, c])));
            }
            out.extend(x.data.iter().map(|&v| T::of(v as f64)));
        }
        Ok(out)
    }

    /// Forward pass over a batch; `dropout` enables training-mode dropout.
    pub(crate) fn run(&self, input: Vec<T>, batch: usize, mut dropout: Option<&mut SimRng>) -> Trace<T> {
        let mut acts = Vec::with_capacity(self.layers.len());
        let mut saved = vec![None];
        acts.push(input);
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            let x = &acts[i - 1];
            let (out, keep) = match *layer {
                LayerSpec::Conv { filters, kernel } => {
                    let Shape::Map { h, w, c } = self.shapes[i - 1] else { unreachable!() };
                    let p = &self.params[self.param_of[i].expect("conv has params")];
                    let cols = im2col(x, batch, h, w, c, kernel);
                    let rows = batch * h * w;
                    let mut y = vec![T::zero(); rows * filters];
                    gemm(T::one(), MatRef::new(&cols, rows, p.fan_in), MatRef::new(&p.weights, p.fan_in, filters), T::zero(), &mut y);
                    add_bias(&mut y, &p.bias);
                    (y, Some(cols))
                }
                LayerSpec::FullyConnected { .. } | LayerSpec::SoftmaxClass { .. } | LayerSpec::Regression { .. } => {
                    let p = &self.params[self.param_of[i].expect("dense has params")];
                    let mut y = vec![T::zero(); batch * p.fan_out];
                    gemm(T::one(), MatRef::new(x, batch, p.fan_in), MatRef::new(&p.weights, p.fan_in, p.fan_out), T::zero(), &mut y);
                    add_bias(&mut y, &p.bias);
                    (y, None)
                }
                LayerSpec::Relu => (x.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect(), None),
                LayerSpec::Dropout { p } => match dropout.as_deref_mut() {
                    Some(rng) if p > 0.0 => {
                        let scale = T::of(1.0 / (1.0 - p));
                        let mask: Vec<T> =
                            (0..x.len()).map(|_| if rng.random::<f64>() >= p { scale } else { T::zero() }).collect();
                        (x.iter().zip(&mask).map(|(a, m)| *a * *m).collect(), Some(mask))
                    }
                    _ => (x.clone(), None),
                },
                LayerSpec::Input { .. } => unreachable!("validated at construction"),
            };
            acts.push(out);
            saved.push(keep);
        }
        Trace { batch, acts, saved }
    }

    /// Parameter gradients for an upstream gradient on the final layer's output (logits).
    pub(crate) fn backward(&self, trace: &Trace<T>, grad_out: Vec<T>) -> Vec<Param<T>> {
        let batch = trace.batch;
        let mut grads: Vec<Param<T>> = self.params.iter().map(Param::zeros_like).collect();
        let mut g = grad_out;
        for i in (1..self.layers.len()).rev() {
            let need_input_grad = i > 1;
            g = match self.layers[i] {
                LayerSpec::Conv { filters, kernel } => {
                    let Shape::Map { h, w, c } = self.shapes[i - 1] else { unreachable!() };
                    let slot = self.param_of[i].expect("conv has params");
                    let p = &self.params[slot];
                    let cols = trace.saved[i].as_ref().expect("im2col saved");
                    let rows = batch * h * w;
                    let gp = &mut grads[slot];
                    gemm(T::one(), MatRef::new(cols, rows, p.fan_in).t(), MatRef::new(&g, rows, filters), T::zero(), &mut gp.weights);
                    column_sums(&g, filters, &mut gp.bias);
                    if !need_input_grad {
                        break;
                    }
                    let mut gcols = vec![T::zero(); rows * p.fan_in];
                    gemm(T::one(), MatRef::new(&g, rows, filters), MatRef::new(&p.weights, p.fan_in, filters).t(), T::zero(), &mut gcols);
                    col2im(&gcols, batch, h, w, c, kernel)
                }
                LayerSpec::FullyConnected { .. } | LayerSpec::SoftmaxClass { .. } | LayerSpec::Regression { .. } => {
                    let slot = self.param_of[i].expect("dense has params");
                    let p = &self.params[slot];
                    let x = &trace.acts[i - 1];
                    let gp = &mut grads[slot];
                    gemm(T::one(), MatRef::new(x, batch, p.fan_in).t(), MatRef::new(&g, batch, p.fan_out), T::zero(), &mut gp.weights);
                    column_sums(&g, p.fan_out, &mut gp.bias);
                    if !need_input_grad {
                        break;
                    }
                    let mut gx = vec![T::zero(); batch * p.fan_in];
                    gemm(T::one(), MatRef::new(&g, batch, p.fan_out), MatRef::new(&p.weights, p.fan_in, p.fan_out).t(), T::zero(), &mut gx);
                    gx
                }
                LayerSpec::Relu => {
                    let y = &trace.acts[i];
                    g.iter().zip(y).map(|(gv, yv)| if *yv > T::zero() { *gv } else { T::zero() }).collect()
                }
                LayerSpec::Dropout { .. } => match &trace.saved[i] {
                    Some(mask) => g.iter().zip(mask).map(|(a, m)| *a * *m).collect(),
                    None => g,
                },
                LayerSpec::Input { .. } => unreachable!(),
            };
        }
        grads
    }

    /// Network output for one sample: class probabilities, or the regression output
    /// in standardized units.
    pub fn forward(&self, x: &InputTensor, dropout: Option<&mut SimRng>) -> Result<Vec<T>> {
        let trace = self.run(self.input_batch(&[x])?, 1, dropout);
        Ok(match self.head() {
            Head::Class { .. } => {
                let logits: Vec<f64> = trace.output().iter().map(|v| v.f64()).collect();
                softmax(&logits).into_iter().map(T::of).collect()
            }
            Head::Regress { .. } => trace.output().to_vec(),
        })
    }

    /// Raw final-layer outputs for a batch in inference mode.
    pub fn infer_batch(&self, xs: &[&InputTensor]) -> Result<Vec<Vec<T>>> {
        let out_len = self.output_len();
        let trace = self.run(self.input_batch(xs)?, xs.len(), None);
        Ok(trace.output().chunks_exact(out_len).map(<[T]>::to_vec).collect())
    }

    pub fn predict_class(&self, x: &InputTensor) -> Result<usize> {
        if !matches!(self.head(), Head::Class { .. }) {
            return Err(Error::InvalidParams("predict_class needs a classification head".into()));
        }
        let out = self.infer_batch(&[x])?;
        Ok(argmax(&out[0]))
    }

    /// Regression output mapped back to label units.
    pub fn predict_regression(&self, x: &InputTensor) -> Result<Vec<f64>> {
        if !matches!(self.head(), Head::Regress { .. }) {
            return Err(Error::InvalidParams("predict_regression needs a regression head".into()));
        }
        let out: Vec<f64> = self.infer_batch(&[x])?.remove(0).into_iter().map(Real::f64).collect();
        Ok(match &self.standardizer {
            Some(s) => s.invert(&out),
            None => out,
        })
    }
}
