use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("channel is rank deficient for {n_s} streams (sigma ratio {ratio:.3e})")]
    RankDeficient { n_s: usize, ratio: f64 },

    #[error("combiner noise covariance is singular (condition number {cond:.3e})")]
    SingularCombiner { cond: f64 },

    #[error("combiner gram matrix W_RF^H Lambda W_RF is singular (condition number {cond:.3e})")]
    SingularGram { cond: f64 },

    #[error("non-finite objective encountered during manifold optimization")]
    NonFiniteObjective,

    #[error("C({n}, {k}) overflows a signed 64-bit integer")]
    CombinatorialOverflow { n: usize, k: usize },

    #[error("{count} subarray configurations exceed the exhaustive cap of {cap}; enable streaming")]
    TooManyConfigurations { count: u64, cap: u64 },

    #[error("no feasible subarray: all {evaluated} candidates were rank deficient")]
    NoFeasibleSubarray { evaluated: u64 },

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("F_RF * F_BB is the zero matrix; cannot restore the power constraint")]
    ZeroProduct,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs or the filesystem.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RankDeficient { .. }
            | Error::SingularCombiner { .. }
            | Error::SingularGram { .. }
            | Error::NonFiniteObjective
            | Error::NoFeasibleSubarray { .. }
            | Error::ZeroProduct
            | Error::DivergedLoss { .. } => true,
            Error::Sample { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn format(path: impl AsRef<std::path::Path>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            reason: reason.into(),
        }
    }
}
