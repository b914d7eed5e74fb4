//! `hbsel`: channel synthesis, subarray selection, beamformer design, dataset
//! generation, network training and the evaluation sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hbsel::beamformer::{design_hybrid, gamma_metrics, spectral_efficiency, HybridBeamformers};
use hbsel::channel::{generate_channel, read_channel, write_channel};
use hbsel::dataset::{build_dataset, read_dataset, write_dataset, Progress};
use hbsel::eval::{run_sweep, train_pipeline, ExperimentConfig, SweepKind};
use hbsel::linalg::{select_rows, ComplexMatrix};
use hbsel::nn::write_pipeline;
use hbsel::rng::derive_seed;
use hbsel::selection::{
    baseline_select, select_best_subarray_with, BaselineScheme, SearchOptions, SelectionObjective, SubarrayConfig,
    CSV_HEADER,
};
use hbsel::Error;

#[derive(Parser)]
#[command(name = "hbsel", version, about = "Receive-subarray selection and hybrid beamforming experiments")]
struct Cli {
    /// JSON experiment config; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw channel realizations and dump them as `channel_<k>.{bin,json}`.
    Channel {
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Pick a receive subarray; appends a row to `selection.csv`.
    Select {
        #[command(flatten)]
        input: ChannelInput,
        #[arg(long, value_enum, default_value_t = Scheme::Best)]
        scheme: Scheme,
        /// Score subarrays with unconstrained instead of hybrid beamformers.
        #[arg(long)]
        unconstrained: bool,
        /// Allow search spaces above the exhaustive cap.
        #[arg(long)]
        streaming: bool,
    },
    /// Design hybrid beamformers for one subarray; writes `beamformers.json`.
    Beamform {
        #[command(flatten)]
        input: ChannelInput,
        /// Comma-separated receive antennas; defaults to the first N_RS.
        #[arg(long, value_delimiter = ',')]
        indices: Option<Vec<usize>>,
    },
    /// Build the labeled training set under `<out>/dataset`.
    Dataset {
        /// Label each sample from its corrupted channel instead of the clean one.
        #[arg(long)]
        label_from_noisy: bool,
        #[arg(long)]
        streaming: bool,
    },
    /// Train both networks; writes `<out>/models` and `<out>/train_history.csv`.
    Train {
        /// Dataset directory (default `<out>/dataset`).
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Run an evaluation sweep; writes `<out>/<kind>.csv`.
    Eval {
        #[arg(value_enum)]
        kind: Kind,
        /// Trained networks (default: the config's `models_dir`, else trained on the fly).
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Args)]
struct ChannelInput {
    /// Channel dump stem (`<stem>.bin` + `<stem>.json`); drawn from the seed when absent.
    #[arg(long)]
    channel: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Best,
    Greedy,
    Random,
    Magnitude,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Snr,
    Nrs,
    Corruption,
    Bits,
    Timing,
}

impl From<Kind> for SweepKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Snr => SweepKind::Snr,
            Kind::Nrs => SweepKind::Nrs,
            Kind::Corruption => SweepKind::Corruption,
            Kind::Bits => SweepKind::Bits,
            Kind::Timing => SweepKind::Timing,
        }
    }
}

enum Failure {
    Config(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(Error::Io(_)) => 1,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    let cfg = match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_channel(input: &ChannelInput, cfg: &ExperimentConfig) -> Result<ComplexMatrix, Failure> {
    let h = match &input.channel {
        Some(stem) => read_channel(stem)?.0,
        None => generate_channel(&cfg.channel_params, derive_seed(cfg.seed, &[10, 0]))?.h,
    };
    if h.shape() != (cfg.dims.n_r, cfg.dims.n_t) {
        return Err(Failure::Config(format!("channel is {:?}, config expects ({}, {})", h.shape(), cfg.dims.n_r, cfg.dims.n_t)));
    }
    Ok(h)
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    json!(rows)
}

fn beamformers_json(bf: &HybridBeamformers) -> Value {
    json!({
        "f_rf": matrix_json(&bf.f_rf),
        "f_bb": matrix_json(&bf.f_bb),
        "w_rf": matrix_json(&bf.w_rf),
        "w_bb": matrix_json(&bf.w_bb),
    })
}

fn append_line(path: &Path, header: &str, line: &str) -> Result<(), Failure> {
    use std::io::Write;
    let fresh = !path.exists();
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(Error::Io)?;
    if fresh {
        writeln!(f, "{header}").map_err(Error::Io)?;
    }
    writeln!(f, "{line}").map_err(Error::Io)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let cfg = load_config(&cli)?;
    let out = cli.out.clone();
    fs::create_dir_all(&out).map_err(Error::Io)?;
    match cli.command {
        Command::Channel { count } => {
            for k in 0..count {
                let seed = derive_seed(cfg.seed, &[10, k as u64]);
                let real = generate_channel(&cfg.channel_params, seed)?;
                let stem = out.join(format!("channel_{k}"));
                write_channel(&stem, &real.h, seed, &cfg.channel_params)?;
                println!("{}", stem.with_extension("bin").display());
            }
        }
        Command::Select { input, scheme, unconstrained, streaming } => {
            let h = load_channel(&input, &cfg)?;
            let objective =
                if unconstrained { SelectionObjective::Unconstrained } else { SelectionObjective::Hybrid(cfg.mo) };
            let (name, config, rate) = match scheme {
                Scheme::Best => {
                    let opts = SearchOptions { streaming, parallel: true, ..SearchOptions::blocked(cfg.selection_block_size) };
                    let r = select_best_subarray_with(&h, &cfg.dims, &objective, &opts)?;
                    if !r.skipped.is_empty() {
                        eprintln!("skipped {} rank-deficient subarrays", r.skipped.len());
                    }
                    ("best", r.best, r.rate)
                }
                other => {
                    let (name, s) = match other {
                        Scheme::Greedy => ("greedy", BaselineScheme::Greedy),
                        Scheme::Random => ("random", BaselineScheme::Random { seed: derive_seed(cfg.seed, &[11, 0]) }),
                        _ => ("magnitude", BaselineScheme::Magnitude),
                    };
                    let c: SubarrayConfig = baseline_select(&h, &cfg.dims, s)?;
                    let rate = objective.evaluate(&h, &c.indices, &cfg.dims)?;
                    (name, c, rate)
                }
            };
            let line = format!("{name},{},{},{},{},{rate}", cfg.dims.n_r, config.len(), config.id, config.joined());
            append_line(&out.join("selection.csv"), CSV_HEADER, &line)?;
            println!("{line}");
        }
        Command::Beamform { input, indices } => {
            let h = load_channel(&input, &cfg)?;
            let indices = indices.unwrap_or_else(|| (0..cfg.dims.n_rs).collect());
            let sub = SubarrayConfig::from_indices(indices, cfg.dims.n_r)?;
            if sub.len() != cfg.dims.n_rs {
                return Err(Failure::Config(format!("{} indices given, n_rs is {}", sub.len(), cfg.dims.n_rs)));
            }
            let h_sub = select_rows(&h, &sub.indices);
            let d = design_hybrid(&h_sub, &cfg.dims, &cfg.mo)?;
            let rate = spectral_efficiency(&h_sub, &d.beamformers, &cfg.dims)?;
            let g = gamma_metrics(&d.unconstrained.f_opt, &d.unconstrained.w_opt, &d.beamformers, &cfg.dims);
            let doc = json!({
                "indices": sub.indices,
                "rate_bits": rate,
                "gamma_f": g.gamma_f,
                "gamma_w": g.gamma_w,
                "precoder_trace": d.precoder_trace,
                "combiner_trace": d.combiner_trace,
                "beamformers": beamformers_json(&d.beamformers),
            });
            fs::write(out.join("beamformers.json"), serde_json::to_string_pretty(&doc).expect("json")).map_err(Error::Io)?;
            println!("rate_bits={rate} gamma_f={} gamma_w={}", g.gamma_f, g.gamma_w);
        }
        Command::Dataset { label_from_noisy, streaming } => {
            let mut spec = cfg.dataset_spec(cfg.dims);
            spec.label_from_noisy |= label_from_noisy;
            spec.allow_streaming |= streaming;
            let report = |p: Progress| {
                if p.done == p.total || p.done.is_multiple_of(100) {
                    eprintln!("dataset: {}/{}", p.done, p.total);
                }
            };
            let ds = build_dataset(&spec, Some(&report))?;
            let dir = out.join("dataset");
            write_dataset(&dir, &ds)?;
            println!("{} samples, {} classes -> {}", ds.len(), ds.class_table.len(), dir.display());
        }
        Command::Train { dataset } => {
            let dir = dataset.unwrap_or_else(|| out.join("dataset"));
            let ds = read_dataset(&dir)?;
            let mut history = String::from("network,epoch,train_loss,val_loss,train_accuracy,val_accuracy\n");
            let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let trained = train_pipeline(&ds, &cfg.arch, &cfg.train, derive_seed(cfg.seed, &[20]), &mut |head, m| {
                let net = match head {
                    hbsel::nn::Head::Class { .. } => "cnn_as",
                    hbsel::nn::Head::Regress { .. } => "cnn_rf",
                };
                eprintln!("{net} epoch {} loss {:.5}", m.epoch, m.train_loss);
                history.push_str(&format!(
                    "{net},{},{},{},{},{}\n",
                    m.epoch,
                    m.train_loss,
                    cell(m.val_loss),
                    cell(m.train_accuracy),
                    cell(m.val_accuracy)
                ));
            })?;
            write_pipeline(&out.join("models"), &trained.pipeline)?;
            fs::write(out.join("train_history.csv"), history).map_err(Error::Io)?;
            println!("models -> {}", out.join("models").display());
        }
        Command::Eval { kind, models, trials } => {
            let mut cfg = cfg;
            if models.is_some() {
                cfg.models_dir = models;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate()?;
            let path = run_sweep(&cfg, kind.into(), &out)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hbsel: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
