//! Model checkpoints.
//!
//! The parameter file is binary, little-endian:
//!
//! ```text
//! b"EVGCNPRM" | u32 version (=1) | u32 tensor count
//! per tensor: u32 name length | name (UTF-8) | u32 rank | rank * u64 dims | f64 data
//! ```
//!
//! Next to it, `<checkpoint>.json` holds the encoder config, the label
//! vocabulary and the embedding source the model was trained with.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use evgcn_core::{EncoderConfig, ExtractorModel, LabelVocab, ModelError, ParamStore, Tensor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::EmbeddingsConfig;

pub const PARAM_MAGIC: &[u8; 8] = b"EVGCNPRM";
pub const PARAM_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("not a parameter file (bad magic)")]
    BadMagic,
    #[error("unsupported parameter file version {0}")]
    Version(u32),
    #[error("truncated parameter file: {0}")]
    Truncated(String),
    #[error("tensor {name}: {reason}")]
    Tensor { name: String, reason: String },
    #[error("{path}: sidecar JSON: {source}")]
    Sidecar {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Everything besides the weights needed to rebuild a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSidecar {
    pub encoder: EncoderConfig,
    pub vocab: LabelVocab,
    pub embeddings: EmbeddingsConfig,
}

pub fn params_to_bytes(params: &ParamStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + params.num_values() * 8);
    out.extend_from_slice(PARAM_MAGIC);
    out.extend_from_slice(&PARAM_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (_, name, tensor) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(tensor.shape().len() as u32).to_le_bytes());
        for &d in tensor.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &x in tensor.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<ParamStore, CheckpointError> {
    let mut pos = 0usize;
    let mut take = |n: usize, what: &str| -> Result<&[u8], CheckpointError> {
        let end = pos.checked_add(n).filter(|&e| e <= bytes.len()).ok_or_else(|| {
            CheckpointError::Truncated(format!("{what} needs {n} bytes at offset {pos}, {} left", bytes.len() - pos))
        })?;
        let out = &bytes[pos..end];
        pos = end;
        Ok(out)
    };
    let u32_of = |b: &[u8]| u32::from_le_bytes([b[0], b[1], b[2], b[3]]);

    if take(8, "header")? != PARAM_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32_of(take(4, "header")?);
    if version != PARAM_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let count = u32_of(take(4, "header")?) as usize;
    let mut store = ParamStore::new();
    for k in 0..count {
        let len = u32_of(take(4, "tensor name length")?) as usize;
        let name = String::from_utf8(take(len, "tensor name")?.to_vec())
            .map_err(|_| CheckpointError::Tensor { name: format!("#{k}"), reason: "name is not UTF-8".into() })?;
        let rank = u32_of(take(4, &format!("{name} rank"))?) as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            let b = take(8, &format!("{name} shape"))?;
            let d = u64::from_le_bytes(b.try_into().expect("8 bytes"));
            shape.push(usize::try_from(d).map_err(|_| CheckpointError::Tensor {
                name: name.clone(),
                reason: format!("dimension {d} too large"),
            })?);
        }
        let values = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|v| v.checked_mul(8).map(|_| v))
            .ok_or_else(|| CheckpointError::Tensor { name: name.clone(), reason: "shape overflows".into() })?;
        let raw = take(values * 8, &format!("{name} data"))?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let tensor = Tensor::new(shape, data)
            .map_err(|e| CheckpointError::Tensor { name: name.clone(), reason: e.to_string() })?;
        store
            .add(&name, tensor)
            .map_err(|_| CheckpointError::Tensor { name: name.clone(), reason: "duplicate name".into() })?;
    }
    if pos != bytes.len() {
        return Err(CheckpointError::Truncated(format!("{} trailing bytes after the last tensor", bytes.len() - pos)));
    }
    Ok(store)
}

pub fn write_params(path: &Path, params: &ParamStore) -> Result<(), CheckpointError> {
    fs::write(path, params_to_bytes(params)).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })
}

pub fn read_params(path: &Path) -> Result<ParamStore, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })?;
    params_from_bytes(&bytes)
}

/// `model.bin` → `model.bin.json`.
pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.as_os_str().to_os_string();
    name.push(".json");
    PathBuf::from(name)
}

pub fn save_model(path: &Path, model: &ExtractorModel, embeddings: &EmbeddingsConfig) -> Result<(), CheckpointError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CheckpointError::Io { path: dir.to_path_buf(), source })?;
    }
    write_params(path, model.params())?;
    let sidecar = ModelSidecar {
        encoder: model.config().clone(),
        vocab: model.vocab().clone(),
        embeddings: embeddings.clone(),
    };
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises");
    text.push('\n');
    fs::write(&side, text).map_err(|source| CheckpointError::Io { path: side, source })
}

pub fn load_model(path: &Path) -> Result<(ExtractorModel, ModelSidecar), CheckpointError> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|source| CheckpointError::Io { path: side.clone(), source })?;
    let sidecar: ModelSidecar =
        serde_json::from_str(&text).map_err(|source| CheckpointError::Sidecar { path: side, source })?;
    let params = read_params(path)?;
    let model = ExtractorModel::from_params(sidecar.encoder.clone(), sidecar.vocab.clone(), params)?;
    Ok((model, sidecar))
}
