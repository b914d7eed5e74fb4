//! Monte-Carlo sweeps over SNR, subarray size, channel corruption, weight
//! precision and array size. Each sweep writes `<out>/<kind>.csv` (a config-hash
//! comment, a header, one row per point and method) and keeps a journal next to
//! it so an interrupted run resumes at the first unfinished point.

mod config;
mod methods;
mod output;

pub use config::{ExperimentConfig, Method, Sweep, SweepKind};
pub use methods::{run_method, MethodContext, TrialOutcome};
pub use output::{mean_std, render_csv, Journal, ResultRow, TimingRow, RESULT_HEADER, TIMING_HEADER};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamformer::{design_hybrid, SystemDims};
use crate::channel::{corrupt_channel, generate_channel, ChannelParams};
use crate::dataset::{build_dataset, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{select_rows, ComplexMatrix};
use crate::nn::{read_pipeline, train_classifier, train_regressor, Arch, CnnModel, EpochMetrics, Head, Pipeline, TrainConfig, TrainReport};
use crate::selection::enumerate_subarrays;
use output::write_atomic;

/// Name of the unquantized reference row in the bits sweep.
pub const FLOAT_PIPELINE: &str = "CNN+CNN(float)";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub csv_path: PathBuf,
    pub config_sha256: String,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRatios {
    pub n_t: Vec<usize>,
    /// Mean MO design time over mean CNN inference time.
    pub mo_over_cnn: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingOutput {
    pub csv_path: PathBuf,
    pub config_sha256: String,
    pub rows: Vec<TimingRow>,
    pub ratios: TimingRatios,
}

/// Networks for both stages plus their training histories.
pub struct TrainedPipeline {
    pub pipeline: Pipeline<f32>,
    pub as_report: TrainReport,
    pub rf_report: TrainReport,
}

/// Trains the selection classifier and the beamformer regressor on `ds`.
pub fn train_pipeline(
    ds: &Dataset,
    arch: &Arch,
    cfg: &TrainConfig,
    init_seed: u64,
    sink: &mut dyn FnMut(Head, &EpochMetrics),
) -> Result<TrainedPipeline> {
    let dims = ds.spec.dims;
    if ds.is_empty() || ds.class_table.is_empty() {
        return Err(Error::InvalidParams("dataset is empty".into()));
    }
    let as_head = Head::Class { n_classes: ds.class_table.len() };
    let rf_head = Head::Regress { outputs: dims.label_len() };
    let mut cnn_as = CnnModel::<f32>::canonical(dims.n_r, dims.n_t, as_head, arch, crate::rng::derive_seed(init_seed, &[0]))?;
    let mut cnn_rf = CnnModel::<f32>::canonical(dims.n_rs, dims.n_t, rf_head, arch, crate::rng::derive_seed(init_seed, &[1]))?;
    let as_report = train_classifier(&mut cnn_as, ds, cfg, &mut |m| sink(as_head, m))?;
    let rf_report = train_regressor(&mut cnn_rf, ds, cfg, &mut |m| sink(rf_head, m))?;
    Ok(TrainedPipeline { pipeline: Pipeline::new(cnn_as, cnn_rf, ds.class_table.clone(), dims)?, as_report, rf_report })
}

/// Loads the pipeline for `dims` from the configured model directory (or its
/// `subdir`), or builds a dataset and trains one when no directory is configured.
pub fn obtain_pipeline(cfg: &ExperimentConfig, dims: SystemDims, subdir: Option<&str>) -> Result<Pipeline<f32>> {
    if let Some(dir) = &cfg.models_dir {
        let dir = subdir.map_or_else(|| dir.clone(), |s| dir.join(s));
        let p = read_pipeline::<f32>(&dir)?;
        if p.dims != dims {
            return Err(Error::ShapeMismatch(format!("models in {} were trained for {:?}, sweep needs {dims:?}", dir.display(), p.dims)));
        }
        return Ok(p);
    }
    let ds = build_dataset(&cfg.dataset_spec(dims), None)?;
    Ok(train_pipeline(&ds, &cfg.arch, &cfg.train, cfg.sub_seed(&[20]), &mut |_, _| {})?.pipeline)
}

fn trial_channels(cfg: &ExperimentConfig, params: &ChannelParams) -> Result<Vec<ComplexMatrix>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| generate_channel(params, cfg.sub_seed(&[10, t as u64])).map(|r| r.h))
        .collect()
}

/// Aggregates per-trial outcomes of one sweep point; numerical failures are
/// counted, anything else aborts the sweep.
fn aggregate(value: f64, names: &[&str], outcomes: Vec<Vec<Result<TrialOutcome>>>, measure_runtime: bool) -> Result<Vec<ResultRow>> {
    let mut per_method: Vec<(Vec<TrialOutcome>, usize)> = vec![(Vec::new(), 0); names.len()];
    for trial in outcomes {
        for (slot, outcome) in per_method.iter_mut().zip(trial) {
            match outcome {
                Ok(o) => slot.0.push(o),
                Err(e) if e.is_numerical() => slot.1 += 1,
                Err(e) => return Err(e),
            }
        }
    }
    let mut rows = Vec::with_capacity(names.len());
    for (name, (ok, failed)) in names.iter().zip(per_method) {
        let pick = |f: fn(&TrialOutcome) -> f64| ok.iter().map(f).collect::<Vec<_>>();
        let rate = mean_std(&pick(|o| o.rate));
        let runtime = mean_std(&pick(|o| o.runtime_s)).map(|m| if measure_runtime { m.0 } else { 0.0 });
        rows.push(ResultRow {
            sweep_value: value,
            method: name.to_string(),
            mean_rate_bits: rate.map(|r| r.0),
            std_rate: rate.map(|r| r.1),
            mean_gamma_f: mean_std(&pick(|o| o.gamma.gamma_f)).map(|m| m.0),
            mean_gamma_w: mean_std(&pick(|o| o.gamma.gamma_w)).map(|m| m.0),
            mean_runtime_s: runtime,
            trials_ok: ok.len(),
            trials_failed: failed,
        });
    }
    Ok(rows)
}

/// Runs the points not yet in the journal, rewriting the CSV after each one.
fn run_points<R>(
    out: &Path,
    kind: SweepKind,
    hash: &str,
    header: &str,
    n_points: usize,
    csv_line: fn(&R) -> String,
    mut point: impl FnMut(usize) -> Result<Vec<R>>,
) -> Result<(PathBuf, Vec<R>)>
where
    R: Clone + Serialize + for<'de> Deserialize<'de>,
{
    fs::create_dir_all(out)?;
    let csv_path = out.join(format!("{}.csv", kind.name()));
    let mut journal = Journal::<R>::open(&out.join(format!("{}.journal.jsonl", kind.name())), hash)?;
    let mut rows = Vec::new();
    for p in 0..n_points {
        let point_rows = match journal.rows_for(p) {
            Some(r) => r.clone(),
            None => {
                let r = point(p)?;
                journal.record(p, r.clone())?;
                r
            }
        };
        rows.extend(point_rows);
        write_atomic(&csv_path, &render_csv(hash, header, rows.iter().map(csv_line)))?;
    }
    Ok((csv_path, rows))
}

fn needs_cnn(methods: &[Method]) -> bool {
    methods.contains(&Method::CnnCnn)
}

fn method_names(methods: &[Method]) -> Vec<&'static str> {
    methods.iter().map(|m| m.name()).collect()
}

/// SNR, antenna-count and corruption sweeps: every configured method per point.
fn method_sweep(cfg: &ExperimentConfig, kind: SweepKind, out: &Path) -> Result<SweepOutput> {
    cfg.validate()?;
    let sweep = cfg.sweep_for(kind)?;
    let hash = cfg.hash(&sweep)?;
    let methods = cfg.methods();
    let names = method_names(&methods);
    if let Sweep::Nrs(v) = &sweep {
        if let Some(&k) = v.iter().find(|&&k| k < cfg.dims.n_s || k > cfg.dims.n_r) {
            return Err(Error::InvalidParams(format!("n_rs={k} outside [{}, {}]", cfg.dims.n_s, cfg.dims.n_r)));
        }
    }
    let channels = trial_channels(cfg, &cfg.channel_params)?;
    let shared = match kind {
        SweepKind::Snr | SweepKind::Corruption if needs_cnn(&methods) => Some(obtain_pipeline(cfg, cfg.dims, None)?),
        _ => None,
    };
    let (csv_path, rows) = run_points(out, kind, &hash, RESULT_HEADER, sweep.len(), ResultRow::csv, |p| {
        let value = sweep.value(p);
        let dims = match &sweep {
            Sweep::Snr(_) => cfg.dims.with_snr_db(value),
            Sweep::Nrs(v) => SystemDims { n_rs: v[p], n_rf_r: cfg.dims.n_rf_r.min(v[p]), ..cfg.dims },
            _ => cfg.dims,
        };
        let per_k = match &sweep {
            Sweep::Nrs(v) if needs_cnn(&methods) => Some(obtain_pipeline(cfg, dims, Some(&format!("nrs_{}", v[p])))?),
            _ => None,
        };
        let pipeline = per_k.as_ref().or(shared.as_ref());
        let outcomes: Vec<Vec<Result<TrialOutcome>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let h = &channels[t];
                let observed = match &sweep {
                    Sweep::Corruption(_) => corrupt_channel(h, value, cfg.sub_seed(&[12, t as u64, p as u64])),
                    _ => h.clone(),
                };
                let ctx = MethodContext {
                    dims,
                    mo: &cfg.mo,
                    block_size: cfg.selection_block_size,
                    random_seed: cfg.sub_seed(&[11, t as u64]),
                    pipeline,
                };
                methods.iter().map(|&m| run_method(m, h, &observed, &ctx)).collect()
            })
            .collect();
        aggregate(value, &names, outcomes, cfg.measure_runtime)
    })?;
    Ok(SweepOutput { csv_path, config_sha256: hash, rows })
}

pub fn run_snr_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SweepOutput> {
    method_sweep(cfg, SweepKind::Snr, out)
}

pub fn run_nrs_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SweepOutput> {
    method_sweep(cfg, SweepKind::Nrs, out)
}

pub fn run_corruption_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SweepOutput> {
    method_sweep(cfg, SweepKind::Corruption, out)
}

/// Pipeline rate with both networks quantized to each bit width, next to the
/// unquantized reference on the same trials.
pub fn run_bits_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SweepOutput> {
    cfg.validate()?;
    let sweep = cfg.sweep_for(SweepKind::Bits)?;
    let Sweep::Bits(bits) = &sweep else { unreachable!("sweep_for returns the requested kind") };
    let hash = cfg.hash(&sweep)?;
    let channels = trial_channels(cfg, &cfg.channel_params)?;
    let float = obtain_pipeline(cfg, cfg.dims, None)?;
    let names = [Method::CnnCnn.name(), FLOAT_PIPELINE];
    let (csv_path, rows) = run_points(out, SweepKind::Bits, &hash, RESULT_HEADER, bits.len(), ResultRow::csv, |p| {
        let quantized = float.quantized(bits[p])?;
        let outcomes: Vec<Vec<Result<TrialOutcome>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let h = &channels[t];
                [&quantized, &float]
                    .iter()
                    .map(|&pl| {
                        let ctx = MethodContext {
                            dims: cfg.dims,
                            mo: &cfg.mo,
                            block_size: cfg.selection_block_size,
                            random_seed: 0,
                            pipeline: Some(pl),
                        };
                        run_method(Method::CnnCnn, h, h, &ctx)
                    })
                    .collect()
            })
            .collect();
        aggregate(bits[p] as f64, &names, outcomes, cfg.measure_runtime)
    })?;
    Ok(SweepOutput { csv_path, config_sha256: hash, rows })
}

/// Wall-clock time of one MO hybrid design versus one CNN pipeline inference at
/// each transmit-array size. Runs serially; networks are freshly initialized with
/// one class per subarray, since inference cost does not depend on the weights.
pub fn run_timing_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<TimingOutput> {
    cfg.validate()?;
    let sweep = cfg.sweep_for(SweepKind::Timing)?;
    let Sweep::Timing(sizes) = &sweep else { unreachable!("sweep_for returns the requested kind") };
    let hash = cfg.hash(&sweep)?;
    let (csv_path, rows) = run_points(out, SweepKind::Timing, &hash, TIMING_HEADER, sizes.len(), TimingRow::csv, |p| {
        let n_t = sizes[p];
        let dims = SystemDims { n_t, ..cfg.dims };
        dims.validate()?;
        let params = cfg.channel_params_for(n_t);
        let table: Vec<_> = enumerate_subarrays(dims.n_r, dims.n_rs)?.collect();
        let cnn_as = CnnModel::<f32>::canonical(dims.n_r, n_t, Head::Class { n_classes: table.len() }, &cfg.arch, cfg.sub_seed(&[30, 0]))?;
        let cnn_rf = CnnModel::<f32>::canonical(dims.n_rs, n_t, Head::Regress { outputs: dims.label_len() }, &cfg.arch, cfg.sub_seed(&[30, 1]))?;
        let pipeline = Pipeline::new(cnn_as, cnn_rf, table, dims)?;
        let mut mo = Vec::with_capacity(cfg.timing_repeats);
        let mut cnn = Vec::with_capacity(cfg.timing_repeats);
        for r in 0..cfg.timing_repeats {
            let h = generate_channel(&params, cfg.sub_seed(&[13, n_t as u64, r as u64]))?.h;
            let h_sub = select_rows(&h, &(0..dims.n_rs).collect::<Vec<_>>());
            if r == 0 {
                // Warm caches and allocator before the first measurement.
                pipeline.predict(&h)?;
            }
            let start = Instant::now();
            design_hybrid(&h_sub, &dims, &cfg.mo)?;
            mo.push(start.elapsed().as_secs_f64());
            let start = Instant::now();
            pipeline.predict(&h)?;
            cnn.push(start.elapsed().as_secs_f64());
        }
        let row = |method: &str, xs: &[f64]| {
            let (mean_s, std_s) = mean_std(xs).expect("at least one repeat");
            TimingRow { n_t, method: method.to_string(), mean_s, std_s }
        };
        Ok(vec![row("MO", &mo), row("CNN", &cnn)])
    })?;
    let mut ratios = TimingRatios { n_t: Vec::new(), mo_over_cnn: Vec::new() };
    for pair in rows.chunks(2) {
        ratios.n_t.push(pair[0].n_t);
        ratios.mo_over_cnn.push(pair[0].mean_s / pair[1].mean_s.max(f64::MIN_POSITIVE));
    }
    write_atomic(&out.join("timing_ratios.json"), &serde_json::to_string_pretty(&ratios)?)?;
    Ok(TimingOutput { csv_path, config_sha256: hash, rows, ratios })
}

/// Dispatches on the sweep kind; the timing sweep's rows are returned as its CSV path only.
pub fn run_sweep(cfg: &ExperimentConfig, kind: SweepKind, out: &Path) -> Result<PathBuf> {
    Ok(match kind {
        SweepKind::Snr => run_snr_sweep(cfg, out)?.csv_path,
        SweepKind::Nrs => run_nrs_sweep(cfg, out)?.csv_path,
        SweepKind::Corruption => run_corruption_sweep(cfg, out)?.csv_path,
        SweepKind::Bits => run_bits_sweep(cfg, out)?.csv_path,
        SweepKind::Timing => run_timing_sweep(cfg, out)?.csv_path,
    })
}
