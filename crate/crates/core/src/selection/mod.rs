//! Receive-antenna subarray selection: exhaustive blocked search and baseline schemes.

mod combinations;

pub use combinations::{binomial, enumerate_subarrays, rank, unrank, SubarrayConfig, Subarrays};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamformer::{design_hybrid, rate_with_unconstrained, spectral_efficiency, MoSettings, SystemDims};
use crate::error::{Error, Result};
use crate::linalg::{select_rows, ComplexMatrix};
use crate::rng::stream;

/// Largest search space scanned without explicitly enabling streaming.
pub const EXHAUSTIVE_CAP: u64 = 1 << 31;

pub const CSV_HEADER: &str = "scheme,n_r,n_rs,best_id,indices,rate_bits";

/// How a candidate subarray is scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionObjective {
    /// Rate with the SVD precoder and MMSE combiner.
    Unconstrained,
    /// Rate with manifold-designed hybrid beamformers.
    Hybrid(MoSettings),
}

impl SelectionObjective {
    /// Objective value of one subarray of `h`; `dims.n_rs` must equal the subarray size.
    pub fn evaluate(&self, h: &ComplexMatrix, indices: &[usize], dims: &SystemDims) -> Result<f64> {
        let h_sub = select_rows(h, indices);
        match self {
            Self::Unconstrained => rate_with_unconstrained(&h_sub, dims),
            Self::Hybrid(settings) => {
                let design = design_hybrid(&h_sub, dims, settings)?;
                spectral_efficiency(&h_sub, &design.beamformers, dims)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub best: SubarrayConfig,
    pub rate: f64,
    /// Subarrays whose objective was computed.
    pub evaluated: u64,
    /// Ids excluded because the subchannel could not carry `N_S` streams.
    pub skipped: Vec<u64>,
    /// Running best `(id, rate)` after each block, when requested.
    pub per_block_best: Option<Vec<(u64, f64)>>,
}

impl SelectionResult {
    pub fn csv_row(&self, scheme: &str, n_r: usize) -> String {
        format!("{scheme},{n_r},{},{},{},{}", self.best.len(), self.best.id, self.best.joined(), self.rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub block_size: usize,
    /// Allow search spaces beyond [`EXHAUSTIVE_CAP`].
    pub streaming: bool,
    /// Evaluate the configurations of a block on the rayon pool.
    pub parallel: bool,
    pub record_blocks: bool,
}

impl SearchOptions {
    pub fn blocked(block_size: usize) -> Self {
        Self { block_size, streaming: false, parallel: false, record_blocks: false }
    }
}

/// Exhaustive best-subarray search with the default options.
pub fn select_best_subarray(
    h: &ComplexMatrix,
    dims: &SystemDims,
    obj: &SelectionObjective,
    block_size: usize,
) -> Result<SelectionResult> {
    select_best_subarray_with(h, dims, obj, &SearchOptions::blocked(block_size))
}

fn better(candidate: (u64, f64), incumbent: Option<(u64, f64)>) -> bool {
    match incumbent {
        None => true,
        Some((id, rate)) => candidate.1 > rate || (candidate.1 == rate && candidate.0 < id),
    }
}

/// Scans all `C(N_R, N_RS)` subarrays in blocks of `block_size`, keeping only the
/// running argmax between blocks. Ties go to the smaller id.
pub fn select_best_subarray_with(
    h: &ComplexMatrix,
    dims: &SystemDims,
    obj: &SelectionObjective,
    opts: &SearchOptions,
) -> Result<SelectionResult> {
    if opts.block_size == 0 {
        return Err(Error::InvalidParams("block_size must be at least 1".into()));
    }
    if h.shape() != (dims.n_r, dims.n_t) {
        return Err(Error::ShapeMismatch(format!("channel is {:?}, expected ({}, {})", h.shape(), dims.n_r, dims.n_t)));
    }
    let mut configs = enumerate_subarrays(dims.n_r, dims.n_rs)?;
    if configs.total() > EXHAUSTIVE_CAP && !opts.streaming {
        return Err(Error::TooManyConfigurations { count: configs.total(), cap: EXHAUSTIVE_CAP });
    }

    let mut carry: Option<(SubarrayConfig, f64)> = None;
    let mut evaluated = 0u64;
    let mut skipped = Vec::new();
    let mut per_block = opts.record_blocks.then(Vec::new);
    loop {
        let block: Vec<SubarrayConfig> = configs.by_ref().take(opts.block_size).collect();
        if block.is_empty() {
            break;
        }
        let eval = |c: &SubarrayConfig| obj.evaluate(h, &c.indices, dims);
        let scores: Vec<Result<f64>> =
            if opts.parallel { block.par_iter().map(eval).collect() } else { block.iter().map(eval).collect() };
        for (config, score) in block.into_iter().zip(scores) {
            match score {
                Ok(rate) => {
                    evaluated += 1;
                    if better((config.id, rate), carry.as_ref().map(|(c, r)| (c.id, *r))) {
                        carry = Some((config, rate));
                    }
                }
                Err(Error::RankDeficient { .. }) => skipped.push(config.id),
                Err(e) => return Err(e),
            }
        }
        if let (Some(log), Some((c, r))) = (per_block.as_mut(), carry.as_ref()) {
            log.push((c.id, *r));
        }
    }
    let (best, rate) = carry.ok_or(Error::NoFeasibleSubarray { evaluated: skipped.len() as u64 })?;
    Ok(SelectionResult { best, rate, evaluated, skipped, per_block_best: per_block })
}

/// Distinct best subarrays in first-seen order; these become the classifier's classes.
pub fn observed_class_set(results: &[SelectionResult]) -> Vec<SubarrayConfig> {
    distinct_configs(results.iter().map(|r| &r.best))
}

pub fn distinct_configs<'a>(configs: impl IntoIterator<Item = &'a SubarrayConfig>) -> Vec<SubarrayConfig> {
    let mut seen = std::collections::HashSet::new();
    configs.into_iter().filter(|c| seen.insert(c.id)).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineScheme {
    /// Uniform over all subarrays.
    Random { seed: u64 },
    /// Rows with the largest L1 mass.
    Magnitude,
    /// Add one antenna at a time, maximizing the unconstrained rate.
    Greedy,
}

pub fn baseline_select(h: &ComplexMatrix, dims: &SystemDims, scheme: BaselineScheme) -> Result<SubarrayConfig> {
    if h.shape() != (dims.n_r, dims.n_t) {
        return Err(Error::ShapeMismatch(format!("channel is {:?}, expected ({}, {})", h.shape(), dims.n_r, dims.n_t)));
    }
    let n_r = dims.n_r;
    let k = dims.n_rs;
    if k == 0 || k > n_r {
        return Err(Error::InvalidParams(format!("need 0 < n_rs <= n_r, got n_rs={k}, n_r={n_r}")));
    }
    match scheme {
        BaselineScheme::Random { seed } => {
            let total = binomial(n_r, k)?;
            let id = stream(seed, &[]).random_range(0..total);
            unrank(id, n_r, k)
        }
        BaselineScheme::Magnitude => {
            let mass: Vec<f64> = (0..n_r).map(|i| h.row(i).iter().map(|z| z.norm()).sum()).collect();
            let mut order: Vec<usize> = (0..n_r).collect();
            // Stable sort keeps the smaller index first on equal mass.
            order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]));
            let mut picked = order[..k].to_vec();
            picked.sort_unstable();
            SubarrayConfig::from_indices(picked, n_r)
        }
        BaselineScheme::Greedy => greedy(h, dims),
    }
}

fn greedy(h: &ComplexMatrix, dims: &SystemDims) -> Result<SubarrayConfig> {
    let mut chosen: Vec<usize> = Vec::with_capacity(dims.n_rs);
    let mut tried = 0u64;
    for step in 1..=dims.n_rs {
        // Fewer antennas than streams: score the partial subset with as many streams as it can carry.
        let partial = SystemDims { n_rs: step, n_s: dims.n_s.min(step), ..*dims };
        let mut best: Option<(usize, f64)> = None;
        for cand in (0..dims.n_r).filter(|i| !chosen.contains(i)) {
            let mut subset = chosen.clone();
            subset.push(cand);
            subset.sort_unstable();
            tried += 1;
            match rate_with_unconstrained(&select_rows(h, &subset), &partial) {
                Ok(rate) => {
                    if best.is_none_or(|(_, r)| rate > r) {
                        best = Some((cand, rate));
                    }
                }
                Err(Error::RankDeficient { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let (cand, _) = best.ok_or(Error::NoFeasibleSubarray { evaluated: tried })?;
        chosen.push(cand);
    }
    chosen.sort_unstable();
    SubarrayConfig::from_indices(chosen, dims.n_r)
}
