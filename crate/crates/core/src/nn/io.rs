//! Model files: `model.json` plus `weights.bin` (f32 LE, layer order, weights
//! row-major then biases) or, when quantized, `codes.bin` (two's-complement
//! `bits`-wide codes, packed LSB-first, same order).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{dequantize_code, CnnModel, Head, LayerSpec, Param, QuantizationSpec, Real, Standardizer};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub layers: Vec<LayerSpec>,
    pub head: Head,
    pub init_seed: u64,
    /// `[fan_in, fan_out]` per parameter layer.
    pub param_shapes: Vec<[usize; 2]>,
    pub quant: Option<QuantizationSpec>,
    pub standardizer: Option<Standardizer>,
}

fn pack_codes(codes: impl Iterator<Item = i64>, bits: u32) -> Vec<u8> {
    let mut out = Vec::new();
    let mut acc: u64 = 0;
    let mut filled = 0u32;
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    for c in codes {
        let mut v = (c as u64) & mask;
        let mut left = bits;
        while left > 0 {
            let room = 8 - filled;
            let take = room.min(left);
            acc |= (v & ((1 << take) - 1)) << filled;
            v >>= take;
            left -= take;
            filled += take;
            if filled == 8 {
                out.push(acc as u8);
                acc = 0;
                filled = 0;
            }
        }
    }
    if filled > 0 {
        out.push(acc as u8);
    }
    out
}

fn unpack_codes(bytes: &[u8], count: usize, bits: u32) -> Option<Vec<i64>> {
    if bytes.len() != (count * bits as usize).div_ceil(8) {
        return None;
    }
    let mut out = Vec::with_capacity(count);
    let mut pos = 0usize;
    for _ in 0..count {
        let mut v: u64 = 0;
        for b in 0..bits as usize {
            let bit = (bytes[(pos + b) / 8] >> ((pos + b) % 8)) & 1;
            v |= (bit as u64) << b;
        }
        pos += bits as usize;
        let signed = if bits > 1 && bits < 64 && v >> (bits - 1) & 1 == 1 { v as i64 - (1i64 << bits) } else { v as i64 };
        out.push(signed);
    }
    Some(out)
}

pub fn write_model<T: Real>(dir: &Path, model: &CnnModel<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        layers: model.layers.clone(),
        head: model.head(),
        init_seed: model.init_seed,
        param_shapes: model.params.iter().map(|p| [p.fan_in, p.fan_out]).collect(),
        quant: model.quant.clone(),
        standardizer: model.standardizer.clone(),
    };
    fs::write(dir.join("model.json"), serde_json::to_vec_pretty(&file)?)?;
    match &model.quant {
        Some(q) => {
            fs::write(dir.join("codes.bin"), pack_codes(q.codes.iter().flatten().copied(), q.bits))?;
        }
        None => {
            let bytes: Vec<u8> =
                model.params.iter().flat_map(|p| p.values()).flat_map(|v| (v.f64() as f32).to_le_bytes()).collect();
            fs::write(dir.join("weights.bin"), bytes)?;
        }
    }
    Ok(())
}

pub fn read_model<T: Real>(dir: &Path) -> Result<CnnModel<T>> {
    let meta_path = dir.join("model.json");
    let mut file: ModelFile = serde_json::from_slice(&fs::read(&meta_path)?)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::format(&meta_path, format!("unsupported format version {}", file.format_version)));
    }
    let sizes: Vec<usize> = file.param_shapes.iter().map(|[i, o]| i * o + o).collect();
    let total: usize = sizes.iter().sum();
    let flat: Vec<f64> = match &mut file.quant {
        Some(q) => {
            let path = dir.join("codes.bin");
            if q.scales.len() != sizes.len() || !(1..=32).contains(&q.bits) {
                return Err(Error::format(&meta_path, "quantization block does not match the layers"));
            }
            let codes = unpack_codes(&fs::read(&path)?, total, q.bits)
                .ok_or_else(|| Error::format(&path, "wrong number of packed codes"))?;
            let mut values = Vec::with_capacity(total);
            let mut rest = codes.as_slice();
            q.codes.clear();
            for (&n, &s) in sizes.iter().zip(&q.scales) {
                let (head, tail) = rest.split_at(n);
                values.extend(head.iter().map(|&c| dequantize_code(c, q.bits, s)));
                q.codes.push(head.to_vec());
                rest = tail;
            }
            values
        }
        None => {
            let path = dir.join("weights.bin");
            let bytes = fs::read(&path)?;
            if bytes.len() != total * 4 {
                return Err(Error::format(&path, format!("expected {} bytes, found {}", total * 4, bytes.len())));
            }
            bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect()
        }
    };
    let mut params = Vec::with_capacity(sizes.len());
    let mut rest = flat.as_slice();
    for &[fan_in, fan_out] in &file.param_shapes {
        let (w, tail) = rest.split_at(fan_in * fan_out);
        let (b, tail) = tail.split_at(fan_out);
        params.push(Param {
            weights: w.iter().map(|&v| T::of(v)).collect(),
            bias: b.iter().map(|&v| T::of(v)).collect(),
            fan_in,
            fan_out,
        });
        rest = tail;
    }
    let mut model = CnnModel::with_params(file.layers, params, file.init_seed)
        .map_err(|e| Error::format(&meta_path, e.to_string()))?;
    model.quant = file.quant;
    model.standardizer = file.standardizer;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::super::{quantize, Arch};
    use super::*;

    fn model() -> CnnModel<f32> {
        CnnModel::canonical(3, 4, Head::Regress { outputs: 2 }, &Arch { filters: 4, fc_units: 8, ..Arch::default() }, 8).unwrap()
    }

    #[test]
    fn packing_is_lsb_first_twos_complement() {
        assert_eq!(pack_codes([1, 0, 1, 1, 0, 0, 0, 1, 1].into_iter(), 1), vec![0b1000_1101, 0b1]);
        assert_eq!(pack_codes([-1, 2].into_iter(), 3), vec![0b010_111]);
        for bits in [2u32, 3, 5, 7, 12, 32] {
            let q = (1i64 << (bits - 1)) - 1;
            let codes: Vec<i64> = (-q..=q).step_by(((2 * q) as usize / 37).max(1)).collect();
            let packed = pack_codes(codes.iter().copied(), bits);
            assert_eq!(unpack_codes(&packed, codes.len(), bits).unwrap(), codes);
        }
        assert!(unpack_codes(&[0u8; 3], 5, 8).is_none());
    }

    #[test]
    fn float_and_quantized_models_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let mut m = model();
        m.standardizer = Some(Standardizer { mean: vec![1.0, 2.0], std: vec![3.0, 4.0] });
        write_model(tmp.path(), &m).unwrap();
        let back: CnnModel<f32> = read_model(tmp.path()).unwrap();
        assert_eq!(back, m);

        for bits in [1, 4, 32] {
            let dir = tmp.path().join(format!("q{bits}"));
            let q = quantize(&m, bits).unwrap();
            write_model(&dir, &q).unwrap();
            assert!(dir.join("codes.bin").exists() && !dir.join("weights.bin").exists());
            let back: CnnModel<f32> = read_model(&dir).unwrap();
            assert_eq!(back.params, q.params);
            assert_eq!(back.quant, q.quant);
            let n = m.n_parameters();
            assert_eq!(std::fs::metadata(dir.join("codes.bin")).unwrap().len() as usize, (n * bits as usize).div_ceil(8));
        }
    }

    #[test]
    fn truncated_weights_are_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        write_model(tmp.path(), &model()).unwrap();
        let p = tmp.path().join("weights.bin");
        let b = std::fs::read(&p).unwrap();
        std::fs::write(&p, &b[..b.len() - 1]).unwrap();
        assert!(matches!(read_model::<f32>(tmp.path()), Err(Error::Format { .. })));
    }
}
