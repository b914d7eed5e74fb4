//! Labeled training data for the subarray classifier and the beamformer regressor.

mod io;
mod label;

pub use io::{read_dataset, write_dataset, DatasetCounts, DatasetMeta, FORMAT_VERSION};
pub use label::{build_label_vector, reconstruct_beamformers, LabelVector};

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamformer::{design_hybrid, MoSettings, SystemDims};
use crate::channel::{corrupt_channel, generate_channel, ChannelParams};
use crate::error::{Error, Result};
use crate::linalg::{select_rows, ComplexMatrix};
use crate::rng::derive_seed;
use crate::selection::{distinct_configs, select_best_subarray_with, SearchOptions, SelectionObjective, SubarrayConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    /// Channel realizations per cluster count.
    pub n_channels: usize,
    pub cluster_counts: Vec<usize>,
    /// Noisy copies per channel; the training SNRs are cycled across them.
    pub n_noise: usize,
    pub snr_train_db: Vec<f64>,
    pub dims: SystemDims,
    pub channel_params: ChannelParams,
    pub mo: MoSettings,
    pub seed: u64,
    /// Select and design on the corrupted channel instead of the clean one.
    pub label_from_noisy: bool,
    pub selection_block_size: usize,
    pub allow_streaming: bool,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_channels: 10,
            cluster_counts: vec![3, 4, 5, 6],
            n_noise: 10,
            snr_train_db: vec![15.0, 20.0, 25.0],
            dims: SystemDims::default(),
            channel_params: ChannelParams::default(),
            mo: MoSettings::default(),
            seed: 0,
            label_from_noisy: false,
            selection_block_size: 1024,
            allow_streaming: false,
        }
    }
}

impl DatasetSpec {
    pub fn total_samples(&self) -> usize {
        self.n_channels * self.cluster_counts.len() * self.n_noise
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.mo.validate()?;
        self.channel_params.validate()?;
        if self.n_channels == 0 || self.n_noise == 0 || self.cluster_counts.is_empty() || self.snr_train_db.is_empty() {
            return Err(Error::InvalidParams("dataset needs channels, cluster counts, noise draws and SNRs".into()));
        }
        if self.cluster_counts.contains(&0) {
            return Err(Error::InvalidParams("cluster counts must be positive".into()));
        }
        if self.snr_train_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParams("training SNRs must be finite".into()));
        }
        if self.selection_block_size == 0 {
            return Err(Error::InvalidParams("selection_block_size must be at least 1".into()));
        }
        let (n_t, n_r) = (self.channel_params.n_t(), self.channel_params.n_r());
        if (n_t, n_r) != (self.dims.n_t, self.dims.n_r) {
            return Err(Error::InvalidParams(format!(
                "channel arrays are {n_r}x{n_t} but dims expect {}x{}",
                self.dims.n_r, self.dims.n_t
            )));
        }
        Ok(())
    }
}

/// `rows × cols × 3`, channel-last: `|H|`, `Re H`, `Im H`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl InputTensor {
    pub fn from_channel(h: &ComplexMatrix) -> Self {
        let (rows, cols) = h.shape();
        let mut data = Vec::with_capacity(rows * cols * 3);
        for i in 0..rows {
            for j in 0..cols {
                let z = h[(i, j)];
                data.extend_from_slice(&[z.norm() as f32, z.re as f32, z.im as f32]);
            }
        }
        Self { rows, cols, data }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.rows, self.cols, 3]
    }

    pub fn at(&self, i: usize, j: usize, c: usize) -> f32 {
        self.data[(i * self.cols + j) * 3 + c]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub index: usize,
    /// Channel realization `n`, cluster-count slot `l_c`, noise draw `l`.
    pub n: usize,
    pub l_c: usize,
    pub l: usize,
    pub n_clusters: usize,
    pub channel_seed: u64,
    pub noise_seed: u64,
    pub snr_db: f64,
    pub subarray: SubarrayConfig,
    /// Best-subarray spectral efficiency on the channel used for labeling.
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub as_pairs: Vec<(InputTensor, u32)>,
    pub rf_pairs: Vec<(InputTensor, LabelVector)>,
    pub class_table: Vec<SubarrayConfig>,
    pub samples: Vec<SampleMeta>,
    pub spec: DatasetSpec,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.as_pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.as_pairs.is_empty()
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.class_table.len()];
        for (_, c) in &self.as_pairs {
            hist[*c as usize] += 1;
        }
        hist
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

struct Labeled {
    subarray: SubarrayConfig,
    rate: f64,
    label: LabelVector,
}

fn label_channel(h: &ComplexMatrix, spec: &DatasetSpec) -> Result<Labeled> {
    let opts = SearchOptions { streaming: spec.allow_streaming, ..SearchOptions::blocked(spec.selection_block_size) };
    let sel = select_best_subarray_with(h, &spec.dims, &SelectionObjective::Hybrid(spec.mo), &opts)?;
    let design = design_hybrid(&select_rows(h, &sel.best.indices), &spec.dims, &spec.mo)?;
    Ok(Labeled { subarray: sel.best, rate: sel.rate, label: build_label_vector(&design.beamformers.gauge_fixed()) })
}

struct RawSample {
    as_input: InputTensor,
    rf_input: InputTensor,
    label: LabelVector,
    meta: SampleMeta,
}

/// Generates `N·L_c·L_n` samples. Each `(n, l_c)` channel is selected and designed
/// once on the clean matrix (or per noisy copy with `label_from_noisy`); inputs are
/// built from the corrupted copies. Output order is by sample index.
pub fn build_dataset(spec: &DatasetSpec, progress: Option<&(dyn Fn(Progress) + Sync)>) -> Result<Dataset> {
    spec.validate()?;
    let l_c_count = spec.cluster_counts.len();
    let total = spec.total_samples();
    let done = AtomicUsize::new(0);

    let groups: Vec<(usize, usize)> = (0..spec.n_channels).flat_map(|n| (0..l_c_count).map(move |lc| (n, lc))).collect();
    let per_group: Vec<Result<Vec<RawSample>>> = groups
        .par_iter()
        .map(|&(n, lc)| {
            let first = (n * l_c_count + lc) * spec.n_noise;
            let params = ChannelParams { n_clusters: spec.cluster_counts[lc], ..spec.channel_params.clone() };
            let channel_seed = derive_seed(spec.seed, &[0, n as u64, lc as u64]);
            let wrap = |index: usize| move |e: Error| Error::Sample { index, source: Box::new(e) };
            let h = generate_channel(&params, channel_seed).map_err(wrap(first))?.h;
            let clean = if spec.label_from_noisy { None } else { Some(label_channel(&h, spec).map_err(wrap(first))?) };
            let mut out = Vec::with_capacity(spec.n_noise);
            for l in 0..spec.n_noise {
                let index = first + l;
                let snr_db = spec.snr_train_db[l % spec.snr_train_db.len()];
                let noise_seed = derive_seed(spec.seed, &[1, n as u64, lc as u64, l as u64]);
                let noisy = corrupt_channel(&h, snr_db, noise_seed);
                let noisy_label;
                let lab = match &clean {
                    Some(lab) => lab,
                    None => {
                        noisy_label = label_channel(&noisy, spec).map_err(wrap(index))?;
                        &noisy_label
                    }
                };
                out.push(RawSample {
                    as_input: InputTensor::from_channel(&noisy),
                    rf_input: InputTensor::from_channel(&select_rows(&noisy, &lab.subarray.indices)),
                    label: lab.label.clone(),
                    meta: SampleMeta {
                        index,
                        n,
                        l_c: lc,
                        l,
                        n_clusters: params.n_clusters,
                        channel_seed,
                        noise_seed,
                        snr_db,
                        subarray: lab.subarray.clone(),
                        rate: lab.rate,
                    },
                });
                let d = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(report) = progress {
                    report(Progress { done: d, total });
                }
            }
            Ok(out)
        })
        .collect();

    let mut raw = Vec::with_capacity(total);
    for group in per_group {
        raw.extend(group?);
    }
    let class_table = distinct_configs(raw.iter().map(|s| &s.meta.subarray));
    let class_of: std::collections::HashMap<u64, u32> =
        class_table.iter().enumerate().map(|(k, c)| (c.id, k as u32)).collect();

    let mut as_pairs = Vec::with_capacity(total);
    let mut rf_pairs = Vec::with_capacity(total);
    let mut samples = Vec::with_capacity(total);
    for s in raw {
        as_pairs.push((s.as_input, class_of[&s.meta.subarray.id]));
        rf_pairs.push((s.rf_input, s.label));
        samples.push(s.meta);
    }
    Ok(Dataset { as_pairs, rf_pairs, class_table, samples, spec: spec.clone() })
}
