//! Lookup-table decoder: every syndrome maps to a minimum-weight error.

use symdec_codes::{CheckMatrix, Pauli, PauliVector, Syndrome};

use crate::error::{check_len, CoreError, Result};
use crate::evalbench::SyndromeDecoder;

/// Default cap on the table size in bytes.
pub const DEFAULT_LUT_BUDGET: usize = 1 << 30;

const UNSET: u64 = u64::MAX;

/// Errors are packed into a `u64` with X-bits at `0..n` and Z-bits at
/// `n..2n`, so codes up to 32 qubits are supported.
#[derive(Clone, Debug)]
pub struct LutDecoder {
    n: usize,
    m: usize,
    table: Vec<u64>,
}

pub fn build_lut_decoder(code: &CheckMatrix) -> Result<LutDecoder> {
    build_lut_decoder_with_budget(code, DEFAULT_LUT_BUDGET)
}

pub fn build_lut_decoder_with_budget(code: &CheckMatrix, budget_bytes: usize) -> Result<LutDecoder> {
    let (n, m) = (code.n(), code.num_rows());
    if 2 * n > 64 || m >= 64 {
        return Err(CoreError::Resource(format!("lookup table needs 2n ≤ 64 and fewer than 64 generators, got n = {n}")));
    }
    let entries = 1usize
        .checked_shl(m as u32)
        .filter(|e| e.checked_mul(8).is_some_and(|b| b <= budget_bytes))
        .ok_or_else(|| CoreError::Resource(format!("lookup table of 2^{m} entries exceeds the {budget_bytes}-byte budget")))?;
    let mut table = Vec::new();
    table
        .try_reserve_exact(entries)
        .map_err(|_| CoreError::Resource(format!("cannot allocate 2^{m} lookup entries")))?;
    table.resize(entries, UNSET);

    // Syndrome and packed encoding of each single-qubit Pauli.
    let mut moves = Vec::with_capacity(n);
    for q in 0..n {
        let mut per = [(0u64, 0u64); 3];
        for (k, p) in [Pauli::X, Pauli::Z, Pauli::Y].into_iter().enumerate() {
            let s = code.syndrome(&PauliVector::single(n, q, p))?.to_index();
            let e = match p {
                Pauli::X => 1u64 << q,
                Pauli::Z => 1u64 << (n + q),
                _ => (1u64 << q) | (1u64 << (n + q)),
            };
            per[k] = (s, e);
        }
        moves.push(per);
    }

    table[0] = 0;
    let mut filled = 1usize;
    let mut weight = 0;
    while filled < entries {
        weight += 1;
        if weight > n {
            return Err(CoreError::Contract("check matrix does not reach every syndrome".into()));
        }
        fill(&moves, weight, 0, 0, 0, &mut table, &mut filled);
    }
    Ok(LutDecoder { n, m, table })
}

/// Visits errors of exactly `left` more qubits drawn from `start..`.
fn fill(moves: &[[(u64, u64); 3]], left: usize, start: usize, s: u64, e: u64, table: &mut [u64], filled: &mut usize) {
    if left == 0 {
        let slot = &mut table[s as usize];
        if *slot == UNSET {
            *slot = e;
            *filled += 1;
        }
        return;
    }
    for q in start..=moves.len() - left {
        for &(ds, de) in &moves[q] {
            fill(moves, left - 1, q + 1, s ^ ds, e | de, table, filled);
            if *filled == table.len() {
                return;
            }
        }
    }
}

impl LutDecoder {
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn lookup(&self, s: &Syndrome) -> Result<PauliVector> {
        check_len(self.m, s.len())?;
        Ok(self.unpack(self.table[s.to_index() as usize]))
    }

    /// Entry stored for a packed syndrome index.
    pub fn entry(&self, index: u64) -> Option<PauliVector> {
        self.table.get(index as usize).map(|&e| self.unpack(e))
    }

    fn unpack(&self, e: u64) -> PauliVector {
        let bits: Vec<u8> = (0..2 * self.n).map(|i| ((e >> i) & 1) as u8).collect();
        PauliVector::from_bits(&bits).expect("even length")
    }
}

impl SyndromeDecoder for LutDecoder {
    fn id(&self) -> String {
        "lut".into()
    }

    fn n(&self) -> usize {
        self.n
    }

    fn decode_many(&self, syndromes: &[Syndrome]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(syndromes.len() * 2 * self.n);
        for s in syndromes {
            check_len(self.m, s.len())?;
            let e = self.table[s.to_index() as usize];
            out.extend((0..2 * self.n).map(|i| ((e >> i) & 1) as f64));
        }
        Ok(out)
    }
}
