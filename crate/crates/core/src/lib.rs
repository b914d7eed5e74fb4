//! Joint receive-subarray selection and hybrid beamformer design for
//! narrowband mmWave MIMO links.
//!
//! The crate covers the whole pipeline: clustered channel synthesis
//! ([`channel`]), unconstrained and manifold-optimized hybrid beamformers
//! ([`beamformer`]), exhaustive/blocked subarray search plus baseline
//! selectors ([`selection`]), labeled dataset generation ([`dataset`]), a
//! from-scratch CNN with post-training quantization ([`nn`]), and the
//! Monte-Carlo experiment sweeps driven by the CLI ([`eval`]).

// `!(x > 0.0)` is used on purpose so NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamformer;
pub mod channel;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod nn;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
