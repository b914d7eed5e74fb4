//! Mini-batch SGD with momentum, cross-entropy / MSE losses and a stratified split.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax, softmax, CnnModel, Head, Param, Real};
use crate::dataset::{Dataset, InputTensor};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<'a> {
    Class(u32),
    Values(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    /// Mini-batch size; clamped to the training split.
    pub batch: usize,
    pub epochs: usize,
    pub val_fraction: f64,
    pub seed: u64,
    /// Samples per forward/backward pass inside a mini-batch (memory only; the update is unchanged).
    pub micro_batch: usize,
    /// Stop once training accuracy reaches this value (classification head only).
    pub stop_at_train_accuracy: Option<f64>,
    /// Standardize regression targets per dimension on the training split.
    pub standardize_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            momentum: 0.9,
            batch: 500,
            epochs: 50,
            val_fraction: 0.30,
            seed: 0,
            micro_batch: 64,
            stop_at_train_accuracy: None,
            standardize_targets: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.momentum)
            && self.batch > 0
            && self.micro_batch > 0
            && self.val_fraction > 0.0
            && self.val_fraction < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid training configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

impl TrainReport {
    pub fn last(&self) -> Option<&EpochMetrics> {
        self.epochs.last()
    }
}

/// Per-dimension affine normalization `(z − mean) / std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Self {
        let mut n = 0usize;
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        for r in rows {
            n += 1;
            for k in 0..dim {
                sum[k] += r[k];
                sq[k] += r[k] * r[k];
            }
        }
        let n = n.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let s = (q / n - m * m).max(0.0).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn invert(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| v * s + m).collect()
    }
}

/// Shuffled split; classification targets are stratified so each class keeps
/// `round(val_fraction · count)` samples for validation.
pub fn split_indices(targets: &[Target<'_>], val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = stream(seed, &[0]);
    let mut groups: std::collections::BTreeMap<i64, Vec<usize>> = std::collections::BTreeMap::new();
    for (i, t) in targets.iter().enumerate() {
        let key = match t {
            Target::Class(c) => *c as i64,
            Target::Values(_) => -1,
        };
        groups.entry(key).or_default().push(i);
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (_, mut idx) in groups {
        idx.shuffle(&mut rng);
        let n_val = (val_fraction * idx.len() as f64).round() as usize;
        let n_val = n_val.min(idx.len().saturating_sub(1));
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

struct Batch {
    loss_sum: f64,
    correct: usize,
}

/// Loss summed over the batch and `∂(loss / norm)/∂output` for each sample.
fn loss_and_grad<T: Real>(
    head: Head,
    out: &[T],
    targets: &[Target<'_>],
    scale: Option<&Standardizer>,
    norm: f64,
    want_grad: bool,
) -> Result<(Batch, Vec<T>)> {
    let width = out.len() / targets.len().max(1);
    let mut grad = if want_grad { Vec::with_capacity(out.len()) } else { Vec::new() };
    let mut loss_sum = 0.0;
    let mut correct = 0;
    for (row, t) in out.chunks_exact(width).zip(targets) {
        let y: Vec<f64> = row.iter().map(|v| v.f64()).collect();
        match (head, t) {
            (Head::Class { .. }, Target::Class(c)) => {
                let c = *c as usize;
                if c >= width {
                    return Err(Error::ShapeMismatch(format!("class {c} outside {width} outputs")));
                }
                let p = softmax(&y);
                loss_sum += -p[c].max(f64::MIN_POSITIVE).ln();
                correct += usize::from(argmax(&y) == c);
                if want_grad {
                    grad.extend(p.iter().enumerate().map(|(k, pk)| T::of((pk - if k == c { 1.0 } else { 0.0 }) / norm)));
                }
            }
            (Head::Regress { .. }, Target::Values(z)) => {
                if z.len() != width {
                    return Err(Error::ShapeMismatch(format!("target has {} values, network outputs {width}", z.len())));
                }
                let z = match scale {
                    Some(s) => s.apply(z),
                    None => z.to_vec(),
                };
                let g = width as f64;
                loss_sum += y.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / g;
                if want_grad {
                    grad.extend(y.iter().zip(&z).map(|(a, b)| T::of(2.0 * (a - b) / (g * norm))));
                }
            }
            _ => return Err(Error::InvalidParams("target kind does not match the network head".into())),
        }
    }
    Ok((Batch { loss_sum, correct }, grad))
}

impl<T: Real> CnnModel<T> {
    /// Mean loss of one sample set (inference mode), exposed for gradient checks.
    pub(crate) fn batch_loss(&self, inputs: &[&InputTensor], targets: &[Target<'_>]) -> Result<f64> {
        let trace = self.run(self.input_batch(inputs)?, inputs.len(), None);
        let (b, _) = loss_and_grad(self.head(), trace.output(), targets, self.standardizer.as_ref(), 1.0, false)?;
        Ok(b.loss_sum / inputs.len() as f64)
    }

    /// Gradient of the mean loss over `inputs` (inference mode).
    pub(crate) fn loss_gradient(&self, inputs: &[&InputTensor], targets: &[Target<'_>]) -> Result<(f64, Vec<Param<T>>)> {
        let n = inputs.len() as f64;
        let trace = self.run(self.input_batch(inputs)?, inputs.len(), None);
        let (b, g) = loss_and_grad(self.head(), trace.output(), targets, self.standardizer.as_ref(), n, true)?;
        Ok((b.loss_sum / n, self.backward(&trace, g)))
    }

    fn evaluate(&self, inputs: &[&InputTensor], targets: &[Target<'_>], idx: &[usize], micro: usize) -> Result<(f64, f64)> {
        let mut loss = 0.0;
        let mut correct = 0;
        for chunk in idx.chunks(micro) {
            let xs: Vec<&InputTensor> = chunk.iter().map(|&i| inputs[i]).collect();
            let ts: Vec<Target<'_>> = chunk.iter().map(|&i| targets[i]).collect();
            let trace = self.run(self.input_batch(&xs)?, xs.len(), None);
            let (b, _) = loss_and_grad(self.head(), trace.output(), &ts, self.standardizer.as_ref(), 1.0, false)?;
            loss += b.loss_sum;
            correct += b.correct;
        }
        let n = idx.len().max(1) as f64;
        Ok((loss / n, correct as f64 / n))
    }
}

/// Trains `model` in place. Regression targets are standardized on the training
/// split first (when enabled) and the fitted map is stored on the model.
pub fn train<T: Real>(
    model: &mut CnnModel<T>,
    inputs: &[&InputTensor],
    targets: &[Target<'_>],
    cfg: &TrainConfig,
    sink: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainReport> {
    cfg.validate()?;
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::InvalidParams(format!("{} inputs for {} targets", inputs.len(), targets.len())));
    }
    let head = model.head();
    let (train_idx, val_idx) = split_indices(targets, cfg.val_fraction, cfg.seed);
    if let Head::Regress { outputs } = head {
        model.standardizer = cfg.standardize_targets.then(|| {
            Standardizer::fit(
                train_idx.iter().filter_map(|&i| match targets[i] {
                    Target::Values(z) => Some(z),
                    Target::Class(_) => None,
                }),
                outputs,
            )
        });
    }
    let is_class = matches!(head, Head::Class { .. });
    let batch = cfg.batch.min(train_idx.len());
    let mut velocity: Vec<Param<T>> = model.params.iter().map(Param::zeros_like).collect();
    let (lr, mu) = (T::of(cfg.lr), T::of(cfg.momentum));
    let mut history = Vec::new();

    for epoch in 0..cfg.epochs {
        let mut order = train_idx.clone();
        order.shuffle(&mut stream(cfg.seed, &[1, epoch as u64]));
        let mut dropout = stream(cfg.seed, &[2, epoch as u64]);
        for mb in order.chunks(batch) {
            let norm = mb.len() as f64;
            let mut acc: Vec<Param<T>> = model.params.iter().map(Param::zeros_like).collect();
            let mut loss = 0.0;
            for micro in mb.chunks(cfg.micro_batch) {
                let xs: Vec<&InputTensor> = micro.iter().map(|&i| inputs[i]).collect();
                let ts: Vec<Target<'_>> = micro.iter().map(|&i| targets[i]).collect();
                let trace = model.run(model.input_batch(&xs)?, xs.len(), Some(&mut dropout));
                let (b, g) = loss_and_grad(head, trace.output(), &ts, model.standardizer.as_ref(), norm, true)?;
                loss += b.loss_sum;
                for (a, g) in acc.iter_mut().zip(model.backward(&trace, g)) {
                    a.values_mut().zip(g.values()).for_each(|(x, y)| *x = *x + *y);
                }
            }
            if !loss.is_finite() {
                return Err(Error::DivergedLoss { epoch });
            }
            for ((w, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&acc) {
                for ((wk, vk), gk) in w.values_mut().zip(v.values_mut()).zip(g.values()) {
                    *vk = mu * *vk - lr * *gk;
                    *wk = *wk + *vk;
                }
            }
        }
        let (train_loss, train_acc) = model.evaluate(inputs, targets, &train_idx, cfg.micro_batch)?;
        let val = if val_idx.is_empty() { None } else { Some(model.evaluate(inputs, targets, &val_idx, cfg.micro_batch)?) };
        if !train_loss.is_finite() || val.is_some_and(|(l, _)| !l.is_finite()) {
            return Err(Error::DivergedLoss { epoch });
        }
        let m = EpochMetrics {
            epoch,
            train_loss,
            val_loss: val.map(|v| v.0),
            train_accuracy: is_class.then_some(train_acc),
            val_accuracy: if is_class { val.map(|v| v.1) } else { None },
        };
        sink(&m);
        let stop = matches!((cfg.stop_at_train_accuracy, m.train_accuracy), (Some(goal), Some(a)) if a >= goal);
        history.push(m);
        if stop {
            break;
        }
    }
    Ok(TrainReport { epochs: history, train_indices: train_idx, val_indices: val_idx })
}

/// Trains a classification model on the subarray-selection pairs of `ds`.
pub fn train_classifier<T: Real>(
    model: &mut CnnModel<T>,
    ds: &Dataset,
    cfg: &TrainConfig,
    sink: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainReport> {
    let inputs: Vec<&InputTensor> = ds.as_pairs.iter().map(|(x, _)| x).collect();
    let targets: Vec<Target<'_>> = ds.as_pairs.iter().map(|(_, c)| Target::Class(*c)).collect();
    train(model, &inputs, &targets, cfg, sink)
}

/// Trains a regression model on the beamformer-label pairs of `ds`.
pub fn train_regressor<T: Real>(
    model: &mut CnnModel<T>,
    ds: &Dataset,
    cfg: &TrainConfig,
    sink: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainReport> {
    let inputs: Vec<&InputTensor> = ds.rf_pairs.iter().map(|(x, _)| x).collect();
    let targets: Vec<Target<'_>> = ds.rf_pairs.iter().map(|(_, z)| Target::Values(z)).collect();
    train(model, &inputs, &targets, cfg, sink)
}
