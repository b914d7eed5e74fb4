//! Experiment configuration shared by the CLI and the sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beamformer::{MoSettings, SystemDims};
use crate::channel::{ArrayGeometry, ChannelParams};
use crate::dataset::DatasetSpec;
use crate::error::{Error, Result};
use crate::nn::{Arch, TrainConfig};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Snr,
    Nrs,
    Corruption,
    Bits,
    Timing,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Snr => "snr",
            SweepKind::Nrs => "nrs",
            SweepKind::Corruption => "corruption",
            SweepKind::Bits => "bits",
            SweepKind::Timing => "timing",
        }
    }
}

/// Sweep axis and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// `ρ/σ_n²` in dB.
    Snr(Vec<f64>),
    Nrs(Vec<usize>),
    /// Test-time channel corruption SNR in dB.
    Corruption(Vec<f64>),
    Bits(Vec<u32>),
    /// Transmit array sizes.
    Timing(Vec<usize>),
}

impl Sweep {
    pub fn kind(&self) -> SweepKind {
        match self {
            Sweep::Snr(_) => SweepKind::Snr,
            Sweep::Nrs(_) => SweepKind::Nrs,
            Sweep::Corruption(_) => SweepKind::Corruption,
            Sweep::Bits(_) => SweepKind::Bits,
            Sweep::Timing(_) => SweepKind::Timing,
        }
    }

    /// Default axis values; the antenna sweep runs from `N_S` to `N_R`.
    pub fn default_for(kind: SweepKind, dims: &SystemDims) -> Self {
        match kind {
            SweepKind::Snr => Sweep::Snr(vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]),
            SweepKind::Nrs => Sweep::Nrs((dims.n_s..=dims.n_r).collect()),
            SweepKind::Corruption => Sweep::Corruption(vec![-10.0, -5.0, 0.0, 5.0, 10.0, 20.0, 30.0]),
            SweepKind::Bits => Sweep::Bits(vec![1, 2, 3, 4, 5, 6, 8, 16, 32]),
            SweepKind::Timing => Sweep::Timing(vec![16, 32, 64]),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Snr(v) | Sweep::Corruption(v) => v.len(),
            Sweep::Nrs(v) | Sweep::Timing(v) => v.len(),
            Sweep::Bits(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            Sweep::Snr(v) | Sweep::Corruption(v) => v[i],
            Sweep::Nrs(v) | Sweep::Timing(v) => v[i] as f64,
            Sweep::Bits(v) => v[i] as f64,
        }
    }
}

/// Selection + beamforming strategies compared by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Unconstrained beamformers on the full receive array.
    FullDigital,
    /// Manifold-designed hybrid beamformers on the full receive array.
    FullHybrid,
    #[serde(rename = "Best+MO")]
    BestMo,
    #[serde(rename = "CNN+CNN")]
    CnnCnn,
    #[serde(rename = "Greedy+MO")]
    GreedyMo,
    #[serde(rename = "Random+MO")]
    RandomMo,
    /// Heaviest rows through a 0/1 switching network (no receive phase shifters).
    #[serde(rename = "Magnitude+MO")]
    MagnitudeMo,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::FullDigital,
        Method::FullHybrid,
        Method::BestMo,
        Method::CnnCnn,
        Method::GreedyMo,
        Method::RandomMo,
        Method::MagnitudeMo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::FullDigital => "FullDigital",
            Method::FullHybrid => "FullHybrid",
            Method::BestMo => "Best+MO",
            Method::CnnCnn => "CNN+CNN",
            Method::GreedyMo => "Greedy+MO",
            Method::RandomMo => "Random+MO",
            Method::MagnitudeMo => "Magnitude+MO",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: SystemDims,
    pub channel_params: ChannelParams,
    /// Training-data recipe; its dims, channel model and MO settings are taken from this config.
    pub spec: DatasetSpec,
    pub mo: MoSettings,
    pub train: TrainConfig,
    pub arch: Arch,
    /// Sweep to run; `None` means the defaults of the requested kind.
    pub sweep: Option<Sweep>,
    /// Methods for the snr/nrs/corruption sweeps; `None` means all of them.
    pub methods: Option<Vec<Method>>,
    pub trials: usize,
    pub seed: u64,
    /// Directory with trained networks (`train` output); trained on the fly when absent.
    pub models_dir: Option<PathBuf>,
    /// Record wall-clock runtimes in sweep rows (makes the CSV run-dependent).
    pub measure_runtime: bool,
    pub selection_block_size: usize,
    /// Repetitions per timing measurement.
    pub timing_repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: SystemDims::default(),
            channel_params: ChannelParams::default(),
            spec: DatasetSpec::default(),
            mo: MoSettings::default(),
            train: TrainConfig::default(),
            arch: Arch::default(),
            sweep: None,
            methods: None,
            trials: 100,
            seed: 0,
            models_dir: None,
            measure_runtime: false,
            selection_block_size: 1024,
            timing_repeats: 5,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.mo.validate()?;
        self.channel_params.validate()?;
        self.train.validate()?;
        if (self.channel_params.n_t(), self.channel_params.n_r()) != (self.dims.n_t, self.dims.n_r) {
            return Err(Error::InvalidParams(format!(
                "channel arrays are {}x{} but dims expect {}x{}",
                self.channel_params.n_r(),
                self.channel_params.n_t(),
                self.dims.n_r,
                self.dims.n_t
            )));
        }
        if self.trials == 0 || self.selection_block_size == 0 || self.timing_repeats == 0 {
            return Err(Error::InvalidParams("trials, selection_block_size and timing_repeats must be positive".into()));
        }
        if let Some(s) = &self.sweep {
            if s.is_empty() {
                return Err(Error::InvalidParams("sweep values must be nonempty".into()));
            }
        }
        if self.methods.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::InvalidParams("method list must be nonempty".into()));
        }
        Ok(())
    }

    /// Reseeds every stochastic stage: trials, dataset synthesis and training.
    pub fn with_seed(self, seed: u64) -> Self {
        Self {
            seed,
            spec: DatasetSpec { seed, ..self.spec },
            train: TrainConfig { seed, ..self.train },
            ..self
        }
    }

    /// Desk-scale system with a matching ULA channel model.
    pub fn with_dims(dims: SystemDims) -> Self {
        Self { dims, channel_params: ChannelParams::with_arrays(dims.n_t, dims.n_r), ..Self::default() }
    }

    /// Channel model with the transmit array resized (timing sweep).
    pub fn channel_params_for(&self, n_t: usize) -> ChannelParams {
        ChannelParams { tx_geometry: ArrayGeometry::ula(n_t), ..self.channel_params.clone() }
    }

    /// Dataset recipe for `dims`, consistent with this config's channel model and MO settings.
    pub fn dataset_spec(&self, dims: SystemDims) -> DatasetSpec {
        DatasetSpec {
            dims,
            channel_params: ChannelParams {
                tx_geometry: ArrayGeometry::ula(dims.n_t),
                ..self.channel_params.clone()
            },
            mo: self.mo,
            selection_block_size: self.selection_block_size,
            ..self.spec.clone()
        }
    }

    pub fn sweep_for(&self, kind: SweepKind) -> Result<Sweep> {
        match &self.sweep {
            Some(s) if s.kind() == kind => Ok(s.clone()),
            Some(s) => Err(Error::InvalidParams(format!(
                "config defines a {} sweep but {} was requested",
                s.kind().name(),
                kind.name()
            ))),
            None => Ok(Sweep::default_for(kind, &self.dims)),
        }
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| Method::ALL.to_vec())
    }

    /// Hex SHA-256 of the canonical JSON of this config and the sweep actually run.
    /// The model directory enters through the digest of its files, not its path, so
    /// moved models keep their hash and retrained ones do not reuse stale journals.
    pub fn hash(&self, sweep: &Sweep) -> Result<String> {
        let models = match &self.models_dir {
            Some(dir) => Some(directory_digest(dir)?),
            None => None,
        };
        let canonical = serde_json::to_vec(&(Self { models_dir: None, ..self.clone() }, sweep, models))?;
        Ok(hex(&Sha256::digest(&canonical)))
    }

    pub(crate) fn sub_seed(&self, path: &[u64]) -> u64 {
        derive_seed(self.seed, path)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest over the relative paths and contents of every file below `dir`, in sorted order.
fn directory_digest(dir: &Path) -> Result<String> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).unwrap_or(&path).to_string_lossy().replace('\\', "/");
                out.push((rel, path));
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for (rel, path) in files {
        h.update(rel.as_bytes());
        h.update([0]);
        let bytes = fs::read(path)?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex(&h.finalize()))
}
