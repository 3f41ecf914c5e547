//! Derivation of independent, reproducible random streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Stream keyed by a hash of `(seed, labels…)`, so streams for different
/// labels are independent of evaluation order.
pub fn derived_rng(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for l in labels {
        h.update(l.to_le_bytes());
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// A child seed for a sub-task, e.g. the held-out set of a run.
pub fn derived_seed(seed: u64, labels: &[u64]) -> u64 {
    derived_rng(seed, labels).next_u64()
}

/// Stable numeric tags for the derived streams.
pub mod stream {
    pub const ORACLE_TRAIN: u64 = 1;
    pub const ORACLE_TEST: u64 = 2;
    pub const ORACLE_INIT: u64 = 3;
    pub const DATASET: u64 = 4;
    pub const DECODER_INIT: u64 = 5;
    pub const DECODER_SHUFFLE: u64 = 6;
    pub const REOPT_SHUFFLE: u64 = 7;
    pub const METRICS: u64 = 8;
    pub const SWEEP: u64 = 9;
    pub const DECODER_TEST: u64 = 10;
}
