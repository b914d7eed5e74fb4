//! Post-training per-layer symmetric uniform quantization of weights and biases.

use serde::{Deserialize, Serialize};

use super::{CnnModel, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    pub bits: u32,
    /// One scale per parameter layer, shared by its weights and biases.
    pub scales: Vec<f64>,
    /// Integer codes per parameter layer (weights then biases); stored in `codes.bin`.
    #[serde(skip)]
    pub codes: Vec<Vec<i64>>,
}

/// Reconstructed value of one code. With one bit, code 1 is `+scale` and 0 is `−scale`.
pub fn dequantize_code(code: i64, bits: u32, scale: f64) -> f64 {
    if bits == 1 {
        if code != 0 {
            scale
        } else {
            -scale
        }
    } else {
        code as f64 * scale
    }
}

fn quantize_layer(values: &[f64], bits: u32) -> (f64, Vec<i64>) {
    if bits == 1 {
        let mean = values.iter().map(|v| v.abs()).sum::<f64>() / values.len().max(1) as f64;
        let scale = if mean > 0.0 { mean } else { f64::MIN_POSITIVE };
        return (scale, values.iter().map(|&v| i64::from(v >= 0.0)).collect());
    }
    let qmax = ((1i64 << (bits - 1)) - 1) as f64;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { peak / qmax } else { 1.0 };
    let codes = values.iter().map(|&v| (v / scale).round().clamp(-qmax, qmax) as i64).collect();
    (scale, codes)
}

/// Copy of `model` whose parameters are replaced by their `bits`-bit reconstructions.
/// `scale = max|w| / (2^{bits−1} − 1)` for `bits ≥ 2`; `bits = 1` maps to `±mean|w|` by sign.
pub fn quantize<T: Real>(model: &CnnModel<T>, bits: u32) -> Result<CnnModel<T>> {
    if !(1..=32).contains(&bits) {
        return Err(Error::InvalidParams(format!("bits must be in [1, 32], got {bits}")));
    }
    let mut out = model.clone();
    let mut spec = QuantizationSpec { bits, scales: Vec::new(), codes: Vec::new() };
    for p in &mut out.params {
        let values: Vec<f64> = p.values().map(|v| v.f64()).collect();
        let (scale, codes) = quantize_layer(&values, bits);
        for (v, &c) in p.values_mut().zip(&codes) {
            *v = T::of(dequantize_code(c, bits, scale));
        }
        spec.scales.push(scale);
        spec.codes.push(codes);
    }
    out.quant = Some(spec);
    Ok(out)
}
