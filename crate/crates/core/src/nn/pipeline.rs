//! End-to-end inference: classify the subarray, then regress its beamformers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_model, write_model, CnnModel, Head, Real};
use crate::beamformer::{HybridBeamformers, SystemDims};
use crate::dataset::{reconstruct_beamformers, InputTensor};
use crate::error::{Error, Result};
use crate::linalg::{select_rows, ComplexMatrix};
use crate::selection::SubarrayConfig;

/// `argmax CNN_AS(H̃)` → class-table subarray → `CNN_RF(H̃_sub)` → reconstructed beamformers.
/// The output always satisfies the modulus and power constraints.
pub fn predict_pipeline<T: Real>(
    cnn_as: &CnnModel<T>,
    cnn_rf: &CnnModel<T>,
    h_tilde: &ComplexMatrix,
    dims: &SystemDims,
    class_table: &[SubarrayConfig],
) -> Result<(SubarrayConfig, HybridBeamformers)> {
    check(cnn_as, cnn_rf, dims, class_table)?;
    if h_tilde.shape() != (dims.n_r, dims.n_t) {
        return Err(Error::ShapeMismatch(format!("channel is {:?}, expected ({}, {})", h_tilde.shape(), dims.n_r, dims.n_t)));
    }
    let class = cnn_as.predict_class(&InputTensor::from_channel(h_tilde))?;
    let subarray = class_table[class].clone();
    let x_sub = InputTensor::from_channel(&select_rows(h_tilde, &subarray.indices));
    let z = cnn_rf.predict_regression(&x_sub)?;
    let bf = reconstruct_beamformers(&z, dims)?;
    Ok((subarray, bf))
}

fn check<T: Real>(cnn_as: &CnnModel<T>, cnn_rf: &CnnModel<T>, dims: &SystemDims, class_table: &[SubarrayConfig]) -> Result<()> {
    let mismatch = |m: String| Err(Error::ShapeMismatch(m));
    if cnn_as.input_shape() != [dims.n_r, dims.n_t, 3] {
        return mismatch(format!("selection network takes {:?}, dims give {}x{}", cnn_as.input_shape(), dims.n_r, dims.n_t));
    }
    if cnn_as.head() != (Head::Class { n_classes: class_table.len() }) {
        return mismatch(format!("selection head {:?} does not match {} classes", cnn_as.head(), class_table.len()));
    }
    if class_table.iter().any(|c| c.len() != dims.n_rs || c.indices.iter().any(|&i| i >= dims.n_r)) {
        return mismatch("class table entries do not fit the receive array".into());
    }
    if cnn_rf.input_shape() != [dims.n_rs, dims.n_t, 3] {
        return mismatch(format!("beamformer network takes {:?}, dims give {}x{}", cnn_rf.input_shape(), dims.n_rs, dims.n_t));
    }
    if cnn_rf.head() != (Head::Regress { outputs: dims.label_len() }) {
        return mismatch(format!("beamformer head {:?} does not output {} labels", cnn_rf.head(), dims.label_len()));
    }
    Ok(())
}

/// Both networks plus the lookup table that maps classes to subarrays.
#[derive(Debug, Clone)]
pub struct Pipeline<T> {
    pub cnn_as: CnnModel<T>,
    pub cnn_rf: CnnModel<T>,
    pub class_table: Vec<SubarrayConfig>,
    pub dims: SystemDims,
}

impl<T: Real> Pipeline<T> {
    pub fn new(cnn_as: CnnModel<T>, cnn_rf: CnnModel<T>, class_table: Vec<SubarrayConfig>, dims: SystemDims) -> Result<Self> {
        check(&cnn_as, &cnn_rf, &dims, &class_table)?;
        Ok(Self { cnn_as, cnn_rf, class_table, dims })
    }

    pub fn predict(&self, h_tilde: &ComplexMatrix) -> Result<(SubarrayConfig, HybridBeamformers)> {
        predict_pipeline(&self.cnn_as, &self.cnn_rf, h_tilde, &self.dims, &self.class_table)
    }

    /// Same pipeline with both networks quantized to `bits`.
    pub fn quantized(&self, bits: u32) -> Result<Self> {
        Ok(Self {
            cnn_as: super::quantize(&self.cnn_as, bits)?,
            cnn_rf: super::quantize(&self.cnn_rf, bits)?,
            class_table: self.class_table.clone(),
            dims: self.dims,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PipelineFile {
    dims: SystemDims,
    class_table: Vec<SubarrayConfig>,
}

/// Writes `pipeline.json` (dims, class table) and the two networks under `cnn_as/` and `cnn_rf/`.
pub fn write_pipeline<T: Real>(dir: &Path, p: &Pipeline<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = PipelineFile { dims: p.dims, class_table: p.class_table.clone() };
    fs::write(dir.join("pipeline.json"), serde_json::to_vec_pretty(&file)?)?;
    write_model(&dir.join("cnn_as"), &p.cnn_as)?;
    write_model(&dir.join("cnn_rf"), &p.cnn_rf)
}

pub fn read_pipeline<T: Real>(dir: &Path) -> Result<Pipeline<T>> {
    let file: PipelineFile = serde_json::from_slice(&fs::read(dir.join("pipeline.json"))?)?;
    Pipeline::new(read_model(&dir.join("cnn_as"))?, read_model(&dir.join("cnn_rf"))?, file.class_table, file.dims)
}
