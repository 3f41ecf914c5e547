//! Codes-agnostic pieces of the symmetry-aware decoding pipeline: the
//! syndrome oracle, the Transformer decoder, oracle-driven re-optimization,
//! evaluation sweeps and structural metrics.

pub mod artifact;
pub mod dataset;
pub mod decoder;
pub mod error;
pub mod evalbench;
pub mod lut;
pub mod metrics;
pub mod noise;
pub mod oracle;
pub mod reopt;
pub mod seeding;

pub use error::{CoreError, Result};
