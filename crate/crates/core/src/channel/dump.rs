//! Channel dump: `<stem>.bin` holds little-endian f32 `(re, im)` pairs in
//! row-major order; `<stem>.json` is the sidecar `{n_r, n_t, seed, params}`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ChannelParams;
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDumpMeta {
    pub n_r: usize,
    pub n_t: usize,
    pub seed: u64,
    pub params: ChannelParams,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn encode_matrix(h: &ComplexMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(h.len() * 8);
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            let z = h[(i, j)];
            out.extend_from_slice(&(z.re as f32).to_le_bytes());
            out.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_matrix(bytes: &[u8], n_r: usize, n_t: usize) -> Option<ComplexMatrix> {
    if bytes.len() != n_r * n_t * 8 {
        return None;
    }
    let f = |k: usize| f32::from_le_bytes(bytes[k..k + 4].try_into().unwrap()) as f64;
    Some(ComplexMatrix::from_fn(n_r, n_t, |i, j| {
        let k = (i * n_t + j) * 8;
        Complex64::new(f(k), f(k + 4))
    }))
}

pub fn write_channel(stem: &Path, h: &ComplexMatrix, seed: u64, params: &ChannelParams) -> Result<()> {
    let (bin, json) = paths(stem);
    if let Some(dir) = stem.parent() {
        fs::create_dir_all(dir)?;
    }
    let meta = ChannelDumpMeta { n_r: h.nrows(), n_t: h.ncols(), seed, params: params.clone() };
    fs::write(&bin, encode_matrix(h))?;
    fs::write(&json, serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

pub fn read_channel(stem: &Path) -> Result<(ComplexMatrix, ChannelDumpMeta)> {
    let (bin, json) = paths(stem);
    let meta: ChannelDumpMeta = serde_json::from_slice(&fs::read(&json)?)?;
    let bytes = fs::read(&bin)?;
    let h = decode_matrix(&bytes, meta.n_r, meta.n_t).ok_or_else(|| {
        Error::format(&bin, format!("expected {} bytes, found {}", meta.n_r * meta.n_t * 8, bytes.len()))
    })?;
    Ok((h, meta))
}
