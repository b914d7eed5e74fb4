//! Dataset directory: `meta.json`, `as_inputs.bin`, `rf_inputs.bin` (f32 LE,
//! sample-major, row-major, channel-last), `as_labels.bin` (u32 LE) and
//! `rf_labels.bin` (f32 LE, `G` per sample).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetSpec, InputTensor, SampleMeta};
use crate::beamformer::SystemDims;
use crate::error::{Error, Result};
use crate::selection::SubarrayConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub samples: usize,
    pub as_samples: usize,
    pub rf_samples: usize,
    /// Input tensors stored across both networks.
    pub stored_tensors: usize,
    pub classes: usize,
    pub as_input_shape: [usize; 3],
    pub rf_input_shape: [usize; 3],
    pub label_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub spec: DatasetSpec,
    pub dims: SystemDims,
    pub class_table: Vec<SubarrayConfig>,
    pub class_histogram: Vec<usize>,
    pub counts: DatasetCounts,
    pub samples: Vec<SampleMeta>,
}

fn f32_bytes<'a>(values: impl Iterator<Item = &'a f32>) -> Vec<u8> {
    values.flat_map(|v| v.to_le_bytes()).collect()
}

pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    let dims = ds.spec.dims;
    let meta = DatasetMeta {
        format_version: FORMAT_VERSION,
        spec: ds.spec.clone(),
        dims,
        class_table: ds.class_table.clone(),
        class_histogram: ds.class_histogram(),
        counts: DatasetCounts {
            samples: ds.len(),
            as_samples: ds.as_pairs.len(),
            rf_samples: ds.rf_pairs.len(),
            stored_tensors: ds.as_pairs.len() + ds.rf_pairs.len(),
            classes: ds.class_table.len(),
            as_input_shape: [dims.n_r, dims.n_t, 3],
            rf_input_shape: [dims.n_rs, dims.n_t, 3],
            label_len: dims.label_len(),
        },
        samples: ds.samples.clone(),
    };
    fs::write(dir.join("meta.json"), serde_json::to_vec_pretty(&meta)?)?;
    fs::write(dir.join("as_inputs.bin"), f32_bytes(ds.as_pairs.iter().flat_map(|(x, _)| &x.data)))?;
    fs::write(dir.join("rf_inputs.bin"), f32_bytes(ds.rf_pairs.iter().flat_map(|(x, _)| &x.data)))?;
    let classes: Vec<u8> = ds.as_pairs.iter().flat_map(|(_, c)| c.to_le_bytes()).collect();
    fs::write(dir.join("as_labels.bin"), classes)?;
    let labels: Vec<f32> = ds.rf_pairs.iter().flat_map(|(_, z)| z.iter().map(|&v| v as f32)).collect();
    fs::write(dir.join("rf_labels.bin"), f32_bytes(labels.iter()))?;
    Ok(())
}

fn read_words(path: &Path, expected: usize) -> Result<Vec<[u8; 4]>> {
    let bytes = fs::read(path)?;
    if bytes.len() != expected * 4 {
        return Err(Error::format(path, format!("expected {} bytes, found {}", expected * 4, bytes.len())));
    }
    Ok(bytes.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect())
}

fn read_f32(path: &Path, expected: usize) -> Result<Vec<f32>> {
    Ok(read_words(path, expected)?.into_iter().map(f32::from_le_bytes).collect())
}

fn tensors(values: Vec<f32>, rows: usize, cols: usize) -> Vec<InputTensor> {
    values.chunks_exact(rows * cols * 3).map(|c| InputTensor { rows, cols, data: c.to_vec() }).collect()
}

/// Loads a dataset written by [`write_dataset`]. Regression labels come back at f32 precision.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let meta_path = dir.join("meta.json");
    let meta: DatasetMeta = serde_json::from_slice(&fs::read(&meta_path)?)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::format(&meta_path, format!("unsupported format version {}", meta.format_version)));
    }
    let c = &meta.counts;
    let t = c.samples;
    if c.as_samples != t || c.rf_samples != t || meta.samples.len() != t {
        return Err(Error::format(&meta_path, "sample counts disagree"));
    }
    let [ar, ac, _] = c.as_input_shape;
    let [rr, rc, _] = c.rf_input_shape;
    let as_inputs = tensors(read_f32(&dir.join("as_inputs.bin"), t * ar * ac * 3)?, ar, ac);
    let rf_inputs = tensors(read_f32(&dir.join("rf_inputs.bin"), t * rr * rc * 3)?, rr, rc);
    let labels_path = dir.join("as_labels.bin");
    let classes: Vec<u32> = read_words(&labels_path, t)?.into_iter().map(u32::from_le_bytes).collect();
    if let Some(bad) = classes.iter().find(|&&k| k as usize >= meta.class_table.len()) {
        return Err(Error::format(&labels_path, format!("class {bad} outside table of {}", meta.class_table.len())));
    }
    let g = c.label_len;
    let z = read_f32(&dir.join("rf_labels.bin"), t * g)?;
    let labels = z.chunks_exact(g.max(1)).map(|c| c.iter().map(|&v| v as f64).collect::<Vec<f64>>());
    Ok(Dataset {
        as_pairs: as_inputs.into_iter().zip(classes).collect(),
        rf_pairs: rf_inputs.into_iter().zip(labels).collect(),
        class_table: meta.class_table,
        samples: meta.samples,
        spec: meta.spec,
    })
}
