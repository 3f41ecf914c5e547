//! Stabilizer codes over the binary-symplectic representation.
//!
//! An `n`-qubit Pauli error is a [`PauliVector`] of `2n` bits (X-part then
//! Z-part). A [`CheckMatrix`] holds the `n − 1` generators of a code with one
//! logical qubit together with logical representatives derived by Gaussian
//! elimination.

mod bits;
mod builtin;
mod code;
mod distance;
mod error;
mod format;
pub mod gf2;
mod pauli;

pub mod enumerate;

pub use bits::BitVec;
pub use builtin::{
    build_color_code_d5, build_golay_code, builtin, classical_code_generators, css_from_self_orthogonal,
    golay_parity_check_from_generator, golay_parity_check_from_h1, validate_golay_parity_check,
    BUILTIN_NAMES, GOLAY_H1,
};
pub use code::{build_custom, derive_logicals, is_in_stabilizer_group, syndrome, CheckMatrix};
pub use distance::{classical_distance, code_distance, MAX_ENUMERATION_ROWS};
pub use error::{CodeError, Result};
pub use format::{from_text, parse_rows, to_text};
pub use pauli::{symplectic_product, Pauli, PauliVector, Syndrome};
