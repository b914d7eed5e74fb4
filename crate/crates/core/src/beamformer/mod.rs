//! Unconstrained SVD/MMSE beamformers, the spectral-efficiency objective and
//! manifold-optimized hybrid (analog × digital) beamformer design.

mod design;
pub mod manifold;
mod metrics;
mod rate;
mod unconstrained;

pub use design::{
    array_covariance, design_combiner, design_hybrid, design_precoder, switching_combiner, CombinerDesign, CombinerObjective,
    HybridDesign, PrecoderDesign, PrecoderObjective,
};
pub use metrics::{gamma_metrics, GammaMetrics};
pub use rate::{rate_with_unconstrained, spectral_efficiency};
pub(crate) use rate::rate_of;
pub use unconstrained::{unconstrained_beamformers, UnconstrainedBeamformers};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use num_complex::Complex64;

use crate::linalg::{frobenius_sq, ComplexMatrix};

/// Array, stream and RF-chain dimensions plus the link budget (linear units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemDims {
    pub n_t: usize,
    pub n_r: usize,
    pub n_rs: usize,
    pub n_s: usize,
    pub n_rf_t: usize,
    pub n_rf_r: usize,
    pub rho: f64,
    pub sigma_n2: f64,
}

impl Default for SystemDims {
    /// The desk configuration: 16 × 8 array, 4 selected receive antennas, one stream.
    fn default() -> Self {
        Self { n_t: 16, n_r: 8, n_rs: 4, n_s: 1, n_rf_t: 2, n_rf_r: 2, rho: 10.0, sigma_n2: 1.0 }
    }
}

impl SystemDims {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_s >= 1
            && self.n_s <= self.n_rf_t
            && self.n_rf_t <= self.n_t
            && self.n_s <= self.n_rf_r
            && self.n_rf_r <= self.n_rs
            && self.n_rs <= self.n_r;
        if !ok {
            return Err(Error::InvalidParams(format!(
                "need n_s <= n_rf_t <= n_t and n_s <= n_rf_r <= n_rs <= n_r, got {self:?}"
            )));
        }
        if !(self.rho > 0.0 && self.sigma_n2 > 0.0 && self.rho.is_finite() && self.sigma_n2.is_finite()) {
            return Err(Error::InvalidParams("rho and sigma_n2 must be positive and finite".into()));
        }
        Ok(())
    }

    /// Same system with SNR `ρ/σ_n²` set to `snr_db` (σ_n² is kept).
    pub fn with_snr_db(self, snr_db: f64) -> Self {
        Self { rho: self.sigma_n2 * 10f64.powf(snr_db / 10.0), ..self }
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.rho / self.sigma_n2).log10()
    }

    /// Dimensions with every receive antenna retained.
    pub fn full_array(self) -> Self {
        Self { n_rs: self.n_r, ..self }
    }

    /// Length of the regression label vector.
    pub fn label_len(&self) -> usize {
        self.n_t * self.n_rf_t + self.n_rs * self.n_rf_r + 2 * self.n_s * (self.n_rf_t + self.n_rf_r)
    }
}

/// Alternating manifold-optimization controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MoSettings {
    pub max_alternations: usize,
    pub max_manifold_iters: usize,
    pub rel_obj_tol: f64,
    /// Backtracking step multiplier.
    pub shrink: f64,
    /// Armijo constant.
    pub sufficient_decrease: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for MoSettings {
    fn default() -> Self {
        Self {
            max_alternations: 50,
            max_manifold_iters: 100,
            rel_obj_tol: 1e-6,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            restarts: 1,
            seed: 0,
        }
    }
}

impl MoSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_alternations > 0
            && self.max_manifold_iters > 0
            && self.restarts > 0
            && self.rel_obj_tol > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.sufficient_decrease > 0.0
            && self.sufficient_decrease < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid MO settings {self:?}")))
        }
    }
}

/// `(F_RF, F_BB, W_RF, W_BB)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridBeamformers {
    pub f_rf: ComplexMatrix,
    pub f_bb: ComplexMatrix,
    pub w_rf: ComplexMatrix,
    pub w_bb: ComplexMatrix,
}

/// Worst-case deviations from the hardware and power constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub f_rf_modulus_err: f64,
    pub w_rf_modulus_err: f64,
    pub power_err: f64,
}

impl Feasibility {
    pub fn holds(&self, tol: f64) -> bool {
        self.f_rf_modulus_err <= tol && self.w_rf_modulus_err <= tol && self.power_err <= tol
    }
}

fn modulus_err(m: &ComplexMatrix, target: f64) -> f64 {
    m.iter().map(|z| (z.norm() - target).abs()).fold(0.0, f64::max)
}

fn unit_phase(z: Complex64) -> Complex64 {
    if z.norm() > 0.0 {
        z / z.norm()
    } else {
        Complex64::new(1.0, 0.0)
    }
}

fn fix_pair(rf: &ComplexMatrix, bb: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let mut rf = rf.clone();
    let mut bb = bb.clone();
    for k in 0..rf.ncols() {
        let p = unit_phase(rf[(0, k)]);
        rf.column_mut(k).iter_mut().for_each(|z| *z /= p);
        bb.row_mut(k).iter_mut().for_each(|z| *z *= p);
    }
    let mut order: Vec<usize> = (0..rf.ncols()).collect();
    if rf.nrows() > 1 {
        order.sort_by(|&a, &b| rf[(1, a)].arg().total_cmp(&rf[(1, b)].arg()));
    }
    let rf = ComplexMatrix::from_fn(rf.nrows(), rf.ncols(), |i, k| rf[(i, order[k])]);
    let mut bb = ComplexMatrix::from_fn(bb.nrows(), bb.ncols(), |k, j| bb[(order[k], j)]);
    for s in 0..bb.ncols() {
        let lead = bb.column(s).iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
        let p = unit_phase(lead);
        bb.column_mut(s).iter_mut().for_each(|z| *z /= p);
    }
    (rf, bb)
}

impl HybridBeamformers {
    pub fn precoder(&self) -> ComplexMatrix {
        &self.f_rf * &self.f_bb
    }

    pub fn combiner(&self) -> ComplexMatrix {
        &self.w_rf * &self.w_bb
    }

    pub fn feasibility(&self) -> Feasibility {
        let (n_t, n_rs) = (self.f_rf.nrows(), self.w_rf.nrows());
        Feasibility {
            f_rf_modulus_err: modulus_err(&self.f_rf, 1.0 / (n_t as f64).sqrt()),
            w_rf_modulus_err: modulus_err(&self.w_rf, 1.0 / (n_rs as f64).sqrt()),
            power_err: (frobenius_sq(&self.precoder()) - self.f_bb.ncols() as f64).abs(),
        }
    }

    /// Equivalent beamformers in a fixed gauge: every RF column is rotated so its
    /// first entry is real positive (the matching baseband row absorbs the phase),
    /// RF columns are ordered by the phase of their second entry, and each
    /// baseband column is rotated so its largest entry is real positive. The
    /// products change only by per-stream phases, which leave the rate unchanged.
    pub fn gauge_fixed(&self) -> Self {
        let (f_rf, f_bb) = fix_pair(&self.f_rf, &self.f_bb);
        let (w_rf, w_bb) = fix_pair(&self.w_rf, &self.w_bb);
        Self { f_rf, f_bb, w_rf, w_bb }
    }

    pub fn check_shapes(&self, dims: &SystemDims) -> Result<()> {
        let want = [
            ("F_RF", &self.f_rf, dims.n_t, dims.n_rf_t),
            ("F_BB", &self.f_bb, dims.n_rf_t, dims.n_s),
            ("W_RF", &self.w_rf, dims.n_rs, dims.n_rf_r),
            ("W_BB", &self.w_bb, dims.n_rf_r, dims.n_s),
        ];
        for (name, m, r, c) in want {
            if m.shape() != (r, c) {
                return Err(Error::ShapeMismatch(format!("{name} is {:?}, expected ({r}, {c})", m.shape())));
            }
        }
        Ok(())
    }
}
