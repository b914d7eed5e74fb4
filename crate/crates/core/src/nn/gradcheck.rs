//! Central finite-difference check of the backward pass.

use rand::Rng;

use super::{CnnModel, Target};
use crate::dataset::InputTensor;
use crate::error::{Error, Result};
use crate::rng::stream;

pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Sampled weights skipped because a ±step perturbation flipped some ReLU.
    pub excluded_kinks: usize,
}

/// Compares analytic gradients of the inference-mode loss with central differences
/// on `n_weights` distinct, randomly drawn parameters. Relative error is
/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check(
    model: &CnnModel<f64>,
    x: &InputTensor,
    target: Target<'_>,
    n_weights: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let total = model.n_parameters();
    if n_weights == 0 || n_weights > total {
        return Err(Error::InvalidParams(format!("cannot check {n_weights} of {total} parameters")));
    }
    let inputs = [x];
    let targets = [target];
    let (_, grads) = model.loss_gradient(&inputs, &targets)?;
    let input = model.input_batch(&inputs)?;
    let base_pattern = model.run(input.clone(), 1, None).relu_pattern(&model.layers);

    let offsets: Vec<usize> = model
        .params
        .iter()
        .scan(0, |acc, p| {
            let start = *acc;
            *acc += p.len();
            Some(start)
        })
        .collect();
    let locate = |flat: usize| {
        let layer = offsets.partition_point(|&o| o <= flat) - 1;
        (layer, flat - offsets[layer])
    };

    let mut rng = stream(seed, &[]);
    let mut probe = model.clone();
    let mut seen = std::collections::HashSet::new();
    let mut report = GradCheckReport { max_rel_error: 0.0, checked: 0, excluded_kinks: 0 };
    let mut attempts = 0;
    while report.checked < n_weights && attempts < 50 * n_weights && seen.len() < total {
        attempts += 1;
        let flat = rng.random_range(0..total);
        if !seen.insert(flat) {
            continue;
        }
        let (layer, k) = locate(flat);
        let w0 = model.params[layer].get(k);
        let mut eval = |w: f64| -> Result<(f64, bool)> {
            *probe.params[layer].get_mut(k) = w;
            let trace = probe.run(input.clone(), 1, None);
            let same = trace.relu_pattern(&probe.layers) == base_pattern;
            Ok((probe.batch_loss(&inputs, &targets)?, same))
        };
        let (plus, same_p) = eval(w0 + FD_STEP)?;
        let (minus, same_m) = eval(w0 - FD_STEP)?;
        *probe.params[layer].get_mut(k) = w0;
        if !(same_p && same_m) {
            report.excluded_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let analytic = grads[layer].get(k);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        report.max_rel_error = report.max_rel_error.max(rel);
        report.checked += 1;
    }
    Ok(report)
}
