use super::{HybridBeamformers, SystemDims};
use crate::linalg::{frobenius, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMetrics {
    pub gamma_f: f64,
    pub gamma_w: f64,
}

/// Normalized distances to the unconstrained beamformers:
/// `γ_F = ‖F_opt − F_RF F_BB‖_F/(N_T N_S)`, `γ_W = ‖W_opt − W_RF W_BB‖_F/(N_RS N_S)`.
pub fn gamma_metrics(
    f_opt: &ComplexMatrix,
    w_opt: &ComplexMatrix,
    bf: &HybridBeamformers,
    dims: &SystemDims,
) -> GammaMetrics {
    let n_s = dims.n_s as f64;
    GammaMetrics {
        gamma_f: frobenius(&(f_opt - bf.precoder())) / (dims.n_t as f64 * n_s),
        gamma_w: frobenius(&(w_opt - bf.combiner())) / (dims.n_rs as f64 * n_s),
    }
}
