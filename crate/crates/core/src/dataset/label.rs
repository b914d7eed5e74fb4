//! Regression labels: `[∠vec F_RF | Re vec F_BB | Im vec F_BB | ∠vec W_RF | Re vec W_BB | Im vec W_BB]`,
//! column-major, angles in `(−π, π]`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::beamformer::{HybridBeamformers, SystemDims};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, ComplexMatrix};

pub type LabelVector = Vec<f64>;

fn angle(z: &Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Label of length `G = N_T·N_T^RF + N_RS·N_R^RF + 2·N_S·(N_T^RF + N_R^RF)`.
pub fn build_label_vector(bf: &HybridBeamformers) -> LabelVector {
    // nalgebra stores column-major, so plain iteration is vec(·).
    let mut z = Vec::with_capacity(bf.f_rf.len() + bf.w_rf.len() + 2 * (bf.f_bb.len() + bf.w_bb.len()));
    z.extend(bf.f_rf.iter().map(angle));
    z.extend(bf.f_bb.iter().map(|c| c.re));
    z.extend(bf.f_bb.iter().map(|c| c.im));
    z.extend(bf.w_rf.iter().map(angle));
    z.extend(bf.w_bb.iter().map(|c| c.re));
    z.extend(bf.w_bb.iter().map(|c| c.im));
    z
}

/// Inverse of [`build_label_vector`]; `F_BB` is rescaled so that `‖F_RF F_BB‖_F² = N_S`.
pub fn reconstruct_beamformers(z: &[f64], dims: &SystemDims) -> Result<HybridBeamformers> {
    let g = dims.label_len();
    if z.len() != g {
        return Err(Error::ShapeMismatch(format!("label has {} entries, expected {g}", z.len())));
    }
    let mut pos = 0;
    let mut take = |n: usize| {
        let s = &z[pos..pos + n];
        pos += n;
        s
    };
    let phases = |r: usize, c: usize, th: &[f64], m: f64| ComplexMatrix::from_iterator(r, c, th.iter().map(|&t| Complex64::from_polar(m, t)));
    let complex = |r: usize, c: usize, re: &[f64], im: &[f64]| {
        ComplexMatrix::from_iterator(r, c, re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)))
    };
    let (n_t, n_rs, n_s, rf_t, rf_r) = (dims.n_t, dims.n_rs, dims.n_s, dims.n_rf_t, dims.n_rf_r);
    let f_rf = phases(n_t, rf_t, take(n_t * rf_t), 1.0 / (n_t as f64).sqrt());
    let f_bb = complex(rf_t, n_s, take(rf_t * n_s), take(rf_t * n_s));
    let w_rf = phases(n_rs, rf_r, take(n_rs * rf_r), 1.0 / (n_rs as f64).sqrt());
    let w_bb = complex(rf_r, n_s, take(rf_r * n_s), take(rf_r * n_s));

    let norm = frobenius(&(&f_rf * &f_bb));
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroProduct);
    }
    let f_bb = f_bb.scale((n_s as f64).sqrt() / norm);
    Ok(HybridBeamformers { f_rf, f_bb, w_rf, w_bb })
}
