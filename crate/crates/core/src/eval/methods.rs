//! One Monte-Carlo trial of one method: select, design on the observed channel,
//! score on the true channel.

use std::time::Instant;

use super::Method;
use crate::beamformer::{
    design_hybrid, design_precoder, gamma_metrics, rate_of, switching_combiner, unconstrained_beamformers,
    GammaMetrics, HybridBeamformers, MoSettings, SystemDims,
};
use crate::error::{Error, Result};
use crate::linalg::{select_rows, ComplexMatrix};
use crate::nn::Pipeline;
use crate::selection::{baseline_select, select_best_subarray, BaselineScheme, SelectionObjective};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub rate: f64,
    /// Distance of the designed beamformers to the unconstrained ones of the chosen subarray.
    pub gamma: GammaMetrics,
    pub runtime_s: f64,
}

/// Everything a method needs besides the channel pair.
pub struct MethodContext<'a> {
    pub dims: SystemDims,
    pub mo: &'a MoSettings,
    pub block_size: usize,
    pub random_seed: u64,
    pub pipeline: Option<&'a Pipeline<f32>>,
}

/// Runs `method` on the observed channel `h_obs` and evaluates the result on `h_true`.
pub fn run_method(method: Method, h_true: &ComplexMatrix, h_obs: &ComplexMatrix, ctx: &MethodContext<'_>) -> Result<TrialOutcome> {
    let dims = ctx.dims;
    let start = Instant::now();
    let (indices, bf, dims_used): (Vec<usize>, HybridBeamformers, SystemDims) = match method {
        Method::FullDigital => {
            let full = dims.full_array();
            let u = unconstrained_beamformers(h_obs, &full)?;
            let runtime_s = start.elapsed().as_secs_f64();
            let rate = rate_of(h_true, &u.f_opt, &u.w_opt, &full)?;
            return Ok(TrialOutcome { rate, gamma: GammaMetrics { gamma_f: 0.0, gamma_w: 0.0 }, runtime_s });
        }
        Method::FullHybrid => {
            let full = dims.full_array();
            let d = design_hybrid(h_obs, &full, ctx.mo)?;
            ((0..dims.n_r).collect(), d.beamformers, full)
        }
        Method::BestMo => {
            let sel = select_best_subarray(h_obs, &dims, &SelectionObjective::Hybrid(*ctx.mo), ctx.block_size)?;
            let d = design_hybrid(&select_rows(h_obs, &sel.best.indices), &dims, ctx.mo)?;
            (sel.best.indices, d.beamformers, dims)
        }
        Method::GreedyMo | Method::RandomMo => {
            let scheme = if method == Method::GreedyMo {
                BaselineScheme::Greedy
            } else {
                BaselineScheme::Random { seed: ctx.random_seed }
            };
            let sel = baseline_select(h_obs, &dims, scheme)?;
            let d = design_hybrid(&select_rows(h_obs, &sel.indices), &dims, ctx.mo)?;
            (sel.indices, d.beamformers, dims)
        }
        Method::MagnitudeMo => {
            let sel = baseline_select(h_obs, &dims, BaselineScheme::Magnitude)?;
            let h_sub = select_rows(h_obs, &sel.indices);
            let u = unconstrained_beamformers(&h_sub, &dims)?;
            let pre = design_precoder(&u.f_opt, &dims, ctx.mo)?;
            let comb = switching_combiner(&u.w_opt, &h_sub, &pre.f_rf, &pre.f_bb, &dims)?;
            let bf = HybridBeamformers { f_rf: pre.f_rf, f_bb: pre.f_bb, w_rf: comb.w_rf, w_bb: comb.w_bb };
            (sel.indices, bf, dims)
        }
        Method::CnnCnn => {
            let p = ctx
                .pipeline
                .ok_or_else(|| Error::InvalidParams("CNN+CNN needs trained networks".into()))?;
            let (sub, bf) = p.predict(h_obs)?;
            (sub.indices, bf, dims)
        }
    };
    let runtime_s = start.elapsed().as_secs_f64();
    let h_sub_true = select_rows(h_true, &indices);
    let rate = rate_of(&h_sub_true, &bf.precoder(), &bf.combiner(), &dims_used)?;
    let u = unconstrained_beamformers(&select_rows(h_obs, &indices), &dims_used)?;
    let gamma = gamma_metrics(&u.f_opt, &u.w_opt, &bf, &dims_used);
    Ok(TrialOutcome { rate, gamma, runtime_s })
}
