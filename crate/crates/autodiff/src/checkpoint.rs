//! `USDCKPT1` parameter container: magic, u64 manifest length, JSON
//! manifest, then each tensor's data as little-endian values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AutodiffError, Result};
use crate::params::ParamStore;
use crate::scalar::Real;
use crate::tensor::{numel, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"USDCKPT1";

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CheckpointManifest {
    pub dtype: String,
    pub tensors: Vec<TensorEntry>,
}

fn bad(msg: impl Into<String>) -> AutodiffError {
    AutodiffError::Checkpoint(msg.into())
}

pub fn to_bytes<T: Real>(params: &ParamStore<T>) -> Result<Vec<u8>> {
    let manifest = CheckpointManifest {
        dtype: T::DTYPE.to_string(),
        tensors: params
            .iter()
            .map(|(name, t)| TensorEntry {
                name: name.to_string(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest).map_err(|e| bad(e.to_string()))?;
    let mut out = Vec::with_capacity(16 + json.len() + params.num_scalars() * T::BYTES);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in params.iter() {
        for &x in t.data() {
            x.write_le(&mut out);
        }
    }
    Ok(out)
}

pub fn from_bytes<T: Real>(bytes: &[u8]) -> Result<ParamStore<T>> {
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("missing USDCKPT1 magic"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = bytes.get(16..16usize.saturating_add(len)).ok_or_else(|| bad("truncated manifest"))?;
    let manifest: CheckpointManifest = serde_json::from_slice(body).map_err(|e| bad(e.to_string()))?;
    if manifest.dtype != T::DTYPE {
        return Err(bad(format!("dtype {} but {} requested", manifest.dtype, T::DTYPE)));
    }
    let mut pos = 16 + len;
    let mut store = ParamStore::new();
    for entry in manifest.tensors {
        let count = numel(&entry.shape);
        let end = pos + count * T::BYTES;
        let raw = bytes.get(pos..end).ok_or_else(|| bad(format!("truncated data for {}", entry.name)))?;
        let data = raw.chunks_exact(T::BYTES).map(T::read_le).collect();
        store.add(entry.name, Tensor::new(&entry.shape, data)?)?;
        pos = end;
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes after tensor data"));
    }
    Ok(store)
}

pub fn save<T: Real>(params: &ParamStore<T>, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(params)?)?;
    Ok(())
}

pub fn load<T: Real>(path: &Path) -> Result<ParamStore<T>> {
    from_bytes(&fs::read(path)?)
}
