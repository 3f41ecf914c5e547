//! Checkpoint files with JSON sidecars, and content hashing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use symdec_autodiff::checkpoint;

use crate::decoder::{DecoderArch, TransformerDecoder};
use crate::error::{CoreError, Result};
use crate::oracle::OracleMlp;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Oracle,
    Decoder,
}

/// Everything needed to rebuild a model around its checkpointed tensors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub kind: ModelKind,
    pub code: String,
    pub code_sha256: String,
    pub n: usize,
    pub syndrome_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arch: Option<DecoderArch>,
    pub seed: u64,
    /// Resolved run configuration that produced the model.
    #[serde(default)]
    pub config: BTreeMap<String, String>,
    /// Summary figures such as epochs run and final losses.
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_meta(path: &Path, meta: &ModelMeta) -> Result<()> {
    let json = serde_json::to_string_pretty(meta).map_err(|e| CoreError::Format(e.to_string()))?;
    fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<ModelMeta> {
    let text = fs::read_to_string(sidecar_path(path))?;
    serde_json::from_str(&text).map_err(|e| CoreError::Format(format!("{}: {e}", sidecar_path(path).display())))
}

fn expect_kind(meta: &ModelMeta, kind: ModelKind, path: &Path) -> Result<()> {
    if meta.kind == kind {
        Ok(())
    } else {
        Err(CoreError::Format(format!("{} holds a {:?} model, expected {kind:?}", path.display(), meta.kind)))
    }
}

pub fn save_decoder(path: &Path, model: &TransformerDecoder, meta: &ModelMeta) -> Result<()> {
    expect_kind(meta, ModelKind::Decoder, path)?;
    checkpoint::save(&model.store, path)?;
    write_meta(path, meta)
}

pub fn load_decoder(path: &Path) -> Result<(TransformerDecoder, ModelMeta)> {
    let meta = read_meta(path)?;
    expect_kind(&meta, ModelKind::Decoder, path)?;
    let arch = meta.arch.clone().ok_or_else(|| CoreError::Format("decoder sidecar lacks an architecture".into()))?;
    let store = checkpoint::load::<f32>(path)?;
    let model = TransformerDecoder::from_store(&arch, meta.n, meta.syndrome_len, &store)?;
    Ok((model, meta))
}

pub fn save_oracle(path: &Path, mlp: &OracleMlp, meta: &ModelMeta) -> Result<()> {
    expect_kind(meta, ModelKind::Oracle, path)?;
    checkpoint::save(&mlp.store, path)?;
    write_meta(path, meta)
}

pub fn load_oracle(path: &Path) -> Result<(OracleMlp, ModelMeta)> {
    let meta = read_meta(path)?;
    expect_kind(&meta, ModelKind::Oracle, path)?;
    let mlp = OracleMlp::from_store(checkpoint::load::<f32>(path)?)?;
    if mlp.input_dim() != 2 * meta.n || mlp.output_dim() != meta.syndrome_len {
        return Err(CoreError::Format(format!("{} does not match its sidecar shape", path.display())));
    }
    Ok((mlp, meta))
}
