//! Supervised (syndrome, error) pairs and the `USDDATA1` container.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use symdec_codes::{BitVec, CheckMatrix, PauliVector, Syndrome};

use crate::error::{CoreError, Result};
use crate::noise::NoiseModel;
use crate::seeding::{derived_rng, stream};

pub const DATASET_MAGIC: &[u8; 8] = b"USDDATA1";

/// Per-sample error rates of the default training mix.
pub const DEFAULT_P_SCHEDULE: [f64; 5] = [0.01, 0.02, 0.03, 0.04, 0.05];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupervisedPair {
    pub syndrome: Syndrome,
    pub error: PauliVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub seed: u64,
    /// Each pair draws its error rate uniformly from this list.
    pub p_schedule: Vec<f64>,
    pub pairs: Vec<SupervisedPair>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    n: usize,
    syndrome_len: usize,
    count: usize,
    seed: u64,
    p_schedule: Vec<f64>,
}

pub fn make_training_set(code: &CheckMatrix, size: usize, p_schedule: &[f64], seed: u64) -> Result<Dataset> {
    if size == 0 || p_schedule.is_empty() {
        return Err(CoreError::Config("dataset needs size ≥ 1 and a non-empty p schedule".into()));
    }
    let models = p_schedule.iter().map(|&p| NoiseModel::new(p)).collect::<Result<Vec<_>>>()?;
    let mut rng = derived_rng(seed, &[stream::DATASET]);
    let mut pairs = Vec::with_capacity(size);
    for _ in 0..size {
        let model = models[rng.gen_range(0..models.len())];
        let error = model.sample_error(code.n(), &mut rng);
        pairs.push(SupervisedPair {
            syndrome: code.syndrome(&error)?,
            error,
        });
    }
    Ok(Dataset {
        n: code.n(),
        seed,
        p_schedule: p_schedule.to_vec(),
        pairs,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks every stored pair against the code's syndrome map.
    pub fn verify(&self, code: &CheckMatrix) -> Result<()> {
        if code.n() != self.n {
            return Err(CoreError::Dimension { expected: code.n(), found: self.n });
        }
        for (k, pair) in self.pairs.iter().enumerate() {
            if code.syndrome(&pair.error)? != pair.syndrome {
                return Err(CoreError::Format(format!("pair {k}: stored syndrome does not match its error")));
            }
        }
        Ok(())
    }

    /// Syndromes of the selected pairs as a row-major `len × (n−1)` matrix.
    pub fn syndrome_matrix(&self, idx: &[usize]) -> Vec<f32> {
        idx.iter()
            .flat_map(|&i| self.pairs[i].syndrome.bits().iter().map(|b| b as u8 as f32))
            .collect()
    }

    /// Errors of the selected pairs as a row-major `len × 2n` matrix.
    pub fn error_matrix(&self, idx: &[usize]) -> Vec<f32> {
        idx.iter()
            .flat_map(|&i| self.pairs[i].error.to_bits().into_iter().map(f32::from))
            .collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let m = self.pairs.first().map_or(0, |p| p.syndrome.len());
        let header = Header {
            n: self.n,
            syndrome_len: m,
            count: self.pairs.len(),
            seed: self.seed,
            p_schedule: self.p_schedule.clone(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| CoreError::Format(e.to_string()))?;
        let mut out = Vec::new();
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for pair in &self.pairs {
            pack_into(pair.syndrome.bits(), &mut out);
            pack_into(&pair.error.to_bitvec(), &mut out);
        }
        Ok(out)
    }

    /// Parses a container and re-verifies every record against `code`.
    pub fn from_bytes(bytes: &[u8], code: &CheckMatrix) -> Result<Self> {
        let bad = |m: &str| CoreError::Format(format!("dataset: {m}"));
        if bytes.len() < 16 || &bytes[..8] != DATASET_MAGIC {
            return Err(bad("missing USDDATA1 magic"));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let json = bytes.get(16..16usize.saturating_add(len)).ok_or_else(|| bad("truncated header"))?;
        let h: Header = serde_json::from_slice(json).map_err(|e| bad(&e.to_string()))?;
        if h.n != code.n() || h.syndrome_len != code.num_rows() {
            return Err(bad("header does not match the code"));
        }
        let (sb, eb) = (h.syndrome_len.div_ceil(8), (2 * h.n).div_ceil(8));
        let body = &bytes[16 + len..];
        if body.len() != h.count * (sb + eb) {
            return Err(bad("record section has the wrong length"));
        }
        let mut pairs = Vec::with_capacity(h.count);
        for rec in body.chunks_exact(sb + eb) {
            let syndrome = Syndrome::from_bitvec(unpack(&rec[..sb], h.syndrome_len));
            let error = PauliVector::from_bitvec(&unpack(&rec[sb..], 2 * h.n))?;
            pairs.push(SupervisedPair { syndrome, error });
        }
        let ds = Dataset {
            n: h.n,
            seed: h.seed,
            p_schedule: h.p_schedule,
            pairs,
        };
        ds.verify(code)?;
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path, code: &CheckMatrix) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?, code)
    }
}

fn pack_into(bits: &BitVec, out: &mut Vec<u8>) {
    let start = out.len();
    out.resize(start + bits.len().div_ceil(8), 0);
    for i in bits.ones() {
        out[start + i / 8] |= 1 << (i % 8);
    }
}

fn unpack(bytes: &[u8], len: usize) -> BitVec {
    let mut v = BitVec::zeros(len);
    for i in 0..len {
        if bytes[i / 8] >> (i % 8) & 1 == 1 {
            v.set(i, true);
        }
    }
    v
}
