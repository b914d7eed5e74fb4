//! Alternating minimization of `‖X_opt − X_RF X_BB‖_F²` with the analog factor
//! on the complex circle manifold.
//!
//! Precoder: the digital factor is the exact least-squares fit
//! `F_BB = F_RF^† F_opt`, alternated with gradient descent on `F_RF`.
//! Combiner: `W_BB` is tied to `W_RF` through the covariance-weighted closed form
//! `W_BB = (W_RF^H Λ W_RF)^{-1} W_RF^H Λ W_opt`, so the descent runs on the
//! composite cost `W_RF ↦ ‖W_opt − W_RF W_BB(W_RF)‖²` and every alternation
//! ends with `W_BB` refreshed.

use num_complex::Complex64;

use super::manifold::{minimize, CircleObjective, ComplexCircle};
use super::{unconstrained_beamformers, HybridBeamformers, MoSettings, SystemDims, UnconstrainedBeamformers};
use crate::error::{Error, Result};
use crate::linalg::{
    frobenius, frobenius_sq, hermitian_condition, identity, least_squares, solve_hpd, ComplexMatrix, MAX_CONDITION,
};
use crate::rng::stream;

const PRECODER_STREAM: u64 = 0;
const COMBINER_STREAM: u64 = 1;

/// `‖F_opt − X F_BB‖²` for a fixed `F_BB`.
pub struct PrecoderObjective<'a> {
    pub target: &'a ComplexMatrix,
    pub baseband: &'a ComplexMatrix,
}

impl CircleObjective for PrecoderObjective<'_> {
    fn value(&self, x: &ComplexMatrix) -> Result<f64> {
        Ok(frobenius_sq(&(self.target - x * self.baseband)))
    }

    fn euclidean_gradient(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let residual = self.target - x * self.baseband;
        Ok((residual * self.baseband.adjoint()).scale(-2.0))
    }
}

/// `‖W_opt − X B(X)‖²` with `B(X) = (X^H Λ X)^{-1} X^H Λ W_opt`.
pub struct CombinerObjective<'a> {
    pub target: &'a ComplexMatrix,
    pub covariance: &'a ComplexMatrix,
}

impl CombinerObjective<'_> {
    /// Returns `(B, G)` with `G = X^H Λ X`.
    pub fn baseband(&self, x: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let lx = self.covariance * x;
        let gram = x.adjoint() * &lx;
        let cond = hermitian_condition(&gram);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::SingularGram { cond });
        }
        let rhs = lx.adjoint() * self.target;
        let b = solve_hpd(&gram, &rhs).ok_or(Error::SingularGram { cond })?;
        Ok((b, gram))
    }
}

impl CircleObjective for CombinerObjective<'_> {
    fn value(&self, x: &ComplexMatrix) -> Result<f64> {
        let (b, _) = self.baseband(x)?;
        Ok(frobenius_sq(&(self.target - x * b)))
    }

    fn euclidean_gradient(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (b, gram) = self.baseband(x)?;
        let e = self.target - x * &b;
        let n = gram.nrows();
        let gram_inv = solve_hpd(&gram, &identity(n)).ok_or(Error::SingularGram { cond: f64::INFINITY })?;
        let lam = self.covariance;
        let b_h = b.adjoint();
        // Direct term, plus the two terms from differentiating B(X).
        let direct = &e * &b_h;
        let through_rhs = lam * &e * (e.adjoint() * x * &gram_inv);
        let through_gram = lam * x * (&gram_inv * x.adjoint() * &e * &b_h);
        Ok((direct + through_rhs - through_gram).scale(-2.0))
    }
}

#[derive(Debug, Clone)]
pub struct PrecoderDesign {
    pub f_rf: ComplexMatrix,
    /// Renormalized so that `‖F_RF F_BB‖_F² = N_S`.
    pub f_bb: ComplexMatrix,
    /// Objective after initialization and after each alternation (before renormalization).
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CombinerDesign {
    pub w_rf: ComplexMatrix,
    pub w_bb: ComplexMatrix,
    pub trace: Vec<f64>,
}

fn initial_step(baseband: &ComplexMatrix) -> f64 {
    let n = frobenius_sq(baseband);
    if n > 0.0 {
        0.5 / n
    } else {
        1.0
    }
}

fn is_finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective)
    }
}

pub fn design_precoder(f_opt: &ComplexMatrix, dims: &SystemDims, settings: &MoSettings) -> Result<PrecoderDesign> {
    settings.validate()?;
    if f_opt.shape() != (dims.n_t, dims.n_s) {
        return Err(Error::ShapeMismatch(format!("F_opt is {:?}, expected ({}, {})", f_opt.shape(), dims.n_t, dims.n_s)));
    }
    let manifold = ComplexCircle::new(1.0 / (dims.n_t as f64).sqrt());
    let floor = 1e-30 * frobenius_sq(f_opt).max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, ComplexMatrix, ComplexMatrix, Vec<f64>)> = None;

    for restart in 0..settings.restarts {
        let mut rng = stream(settings.seed, &[PRECODER_STREAM, restart as u64]);
        let mut f_rf = manifold.random_point(dims.n_t, dims.n_rf_t, &mut rng);
        let mut f_bb = least_squares(&f_rf, f_opt);
        let mut obj = is_finite(frobenius_sq(&(f_opt - &f_rf * &f_bb)))?;
        let mut trace = vec![obj];
        for _ in 0..settings.max_alternations {
            if obj <= floor {
                break;
            }
            let inner = minimize(
                &PrecoderObjective { target: f_opt, baseband: &f_bb },
                &manifold,
                f_rf.clone(),
                initial_step(&f_bb),
                settings,
            )?;
            let cand_bb = least_squares(&inner.point, f_opt);
            let cand = is_finite(frobenius_sq(&(f_opt - &inner.point * &cand_bb)))?;
            if cand > obj {
                break;
            }
            let decrease = obj - cand;
            f_rf = inner.point;
            f_bb = cand_bb;
            obj = cand;
            trace.push(obj);
            if decrease <= settings.rel_obj_tol * (obj + decrease) {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, f_rf, f_bb, trace));
        }
    }
    let (_, f_rf, f_bb, trace) = best.expect("at least one restart");
    let power = frobenius(&(&f_rf * &f_bb));
    if !(power > 0.0) {
        return Err(Error::ZeroProduct);
    }
    let f_bb = f_bb.scale((dims.n_s as f64).sqrt() / power);
    Ok(PrecoderDesign { f_rf, f_bb, trace })
}

/// Receive-side covariance `Λ = (ρ/N_S) H F F^H H^H + σ² I` for a given precoder `F`.
pub fn array_covariance(h_sub: &ComplexMatrix, precoder: &ComplexMatrix, dims: &SystemDims) -> ComplexMatrix {
    let hf = h_sub * precoder;
    (&hf * hf.adjoint()).scale(dims.rho / dims.n_s as f64) + identity(h_sub.nrows()).scale(dims.sigma_n2)
}

pub fn design_combiner(
    w_opt: &ComplexMatrix,
    h_sub: &ComplexMatrix,
    f_rf: &ComplexMatrix,
    f_bb: &ComplexMatrix,
    dims: &SystemDims,
    settings: &MoSettings,
) -> Result<CombinerDesign> {
    settings.validate()?;
    if w_opt.shape() != (dims.n_rs, dims.n_s) || h_sub.shape() != (dims.n_rs, dims.n_t) {
        return Err(Error::ShapeMismatch(format!(
            "W_opt {:?} / H_sub {:?} do not match n_rs={}, n_t={}, n_s={}",
            w_opt.shape(),
            h_sub.shape(),
            dims.n_rs,
            dims.n_t,
            dims.n_s
        )));
    }
    let covariance = array_covariance(h_sub, &(f_rf * f_bb), dims);
    let objective = CombinerObjective { target: w_opt, covariance: &covariance };
    let manifold = ComplexCircle::new(1.0 / (dims.n_rs as f64).sqrt());
    let floor = 1e-30 * frobenius_sq(w_opt).max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, ComplexMatrix, Vec<f64>)> = None;

    for restart in 0..settings.restarts {
        let mut rng = stream(settings.seed, &[COMBINER_STREAM, restart as u64]);
        let mut w_rf = manifold.random_point(dims.n_rs, dims.n_rf_r, &mut rng);
        let mut obj = is_finite(objective.value(&w_rf)?)?;
        let mut trace = vec![obj];
        for _ in 0..settings.max_alternations {
            if obj <= floor {
                break;
            }
            let (b, _) = objective.baseband(&w_rf)?;
            let inner = minimize(&objective, &manifold, w_rf.clone(), initial_step(&b), settings)?;
            let cand = is_finite(inner.value)?;
            if cand > obj || inner.iterations == 0 {
                break;
            }
            let decrease = obj - cand;
            w_rf = inner.point;
            obj = cand;
            trace.push(obj);
            if decrease <= settings.rel_obj_tol * (obj + decrease) {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, w_rf, trace));
        }
    }
    let (_, w_rf, trace) = best.expect("at least one restart");
    let (w_bb, _) = objective.baseband(&w_rf)?;
    Ok(CombinerDesign { w_rf, w_bb, trace })
}

/// Combiner of a switching network without phase shifters: selected antenna `i`
/// feeds RF chain `i mod N_R^RF` with weight 1, and `W_BB` is the covariance-weighted
/// closed form for that fixed `W_RF`.
pub fn switching_combiner(
    w_opt: &ComplexMatrix,
    h_sub: &ComplexMatrix,
    f_rf: &ComplexMatrix,
    f_bb: &ComplexMatrix,
    dims: &SystemDims,
) -> Result<CombinerDesign> {
    if w_opt.shape() != (dims.n_rs, dims.n_s) || h_sub.shape() != (dims.n_rs, dims.n_t) {
        return Err(Error::ShapeMismatch(format!(
            "W_opt {:?} / H_sub {:?} do not match n_rs={}, n_t={}, n_s={}",
            w_opt.shape(),
            h_sub.shape(),
            dims.n_rs,
            dims.n_t,
            dims.n_s
        )));
    }
    let covariance = array_covariance(h_sub, &(f_rf * f_bb), dims);
    let objective = CombinerObjective { target: w_opt, covariance: &covariance };
    let mut w_rf = ComplexMatrix::zeros(dims.n_rs, dims.n_rf_r);
    for i in 0..dims.n_rs {
        w_rf[(i, i % dims.n_rf_r)] = Complex64::new(1.0, 0.0);
    }
    let (w_bb, _) = objective.baseband(&w_rf)?;
    let trace = vec![objective.value(&w_rf)?];
    Ok(CombinerDesign { w_rf, w_bb, trace })
}

#[derive(Debug, Clone)]
pub struct HybridDesign {
    pub beamformers: HybridBeamformers,
    pub unconstrained: UnconstrainedBeamformers,
    pub precoder_trace: Vec<f64>,
    pub combiner_trace: Vec<f64>,
}

/// Unconstrained beamformers, then the precoder, then the combiner against the
/// covariance induced by the (power-normalized) hybrid precoder.
pub fn design_hybrid(h_sub: &ComplexMatrix, dims: &SystemDims, settings: &MoSettings) -> Result<HybridDesign> {
    let unconstrained = unconstrained_beamformers(h_sub, dims)?;
    let pre = design_precoder(&unconstrained.f_opt, dims, settings)?;
    let comb = design_combiner(&unconstrained.w_opt, h_sub, &pre.f_rf, &pre.f_bb, dims, settings)?;
    Ok(HybridDesign {
        beamformers: HybridBeamformers { f_rf: pre.f_rf, f_bb: pre.f_bb, w_rf: comb.w_rf, w_bb: comb.w_bb },
        unconstrained,
        precoder_trace: pre.trace,
        combiner_trace: comb.trace,
    })
}
