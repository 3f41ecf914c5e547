//! Built-in codes: the distance-5 (4,8,8) color code and the [[23,1,7]]
//! Golay code.

use crate::bits::BitVec;
use crate::code::CheckMatrix;
use crate::distance::classical_distance;
use crate::error::{CodeError, Result};
use crate::gf2::{self, Echelon};
use crate::pauli::PauliVector;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 2] = ["color-d5", "golay"];

pub fn builtin(name: &str) -> Result<CheckMatrix> {
    match name {
        "color-d5" => build_color_code_d5(),
        "golay" => build_golay_code(),
        other => Err(CodeError::Unsupported(format!(
            "unknown built-in code {other:?} (expected one of {BUILTIN_NAMES:?})"
        ))),
    }
}

// Face/qubit incidence of the distance-5 triangular patch of the
// square-octagon lattice: one octagon, the rest weight-4 faces. Up to
// relabelling this is the only 17-qubit triangular color code of distance 5.
const COLOR_D5_FACES: [&[usize]; 8] = [
    &[0, 3, 4, 6, 7, 9, 10, 15],
    &[7, 9, 12, 14],
    &[4, 5, 6, 8],
    &[1, 12, 14, 16],
    &[5, 6, 11, 15],
    &[1, 9, 10, 12],
    &[2, 3, 11, 15],
    &[0, 2, 3, 13],
];
const COLOR_D5_QUBITS: usize = 17;

/// The (4,8,8) color code of distance 5 on 17 qubits, with one X-type and one
/// Z-type generator per face.
pub fn build_color_code_d5() -> Result<CheckMatrix> {
    let faces: Vec<BitVec> = COLOR_D5_FACES
        .iter()
        .map(|f| {
            let mut v = BitVec::zeros(COLOR_D5_QUBITS);
            for &q in *f {
                v.set(q, true);
            }
            v
        })
        .collect();
    css_from_self_orthogonal(&faces)
}

/// Coefficients of `h1(x) = x^12 + x^10 + x^7 + x^4 + x^3 + x^2 + x + 1`,
/// bit `i` holding the coefficient of `x^i`.
pub const GOLAY_H1: u64 = (1 << 12) | (1 << 10) | (1 << 7) | (1 << 4) | (1 << 3) | (1 << 2) | (1 << 1) | 1;
const GOLAY_LEN: usize = 23;

fn degree(p: u64) -> usize {
    63 - p.leading_zeros() as usize
}

/// Polynomial quotient and remainder over GF(2).
pub(crate) fn poly_divmod(mut num: u64, den: u64) -> (u64, u64) {
    assert!(den != 0);
    let dd = degree(den);
    let mut q = 0;
    while num != 0 && degree(num) >= dd {
        let shift = degree(num) - dd;
        q |= 1 << shift;
        num ^= den << shift;
    }
    (q, num)
}

fn cyclic_shifts(poly: u64, count: usize, len: usize) -> Vec<BitVec> {
    (0..count)
        .map(|s| {
            let mut v = BitVec::zeros(len);
            for i in 0..=degree(poly) {
                if (poly >> i) & 1 == 1 {
                    v.set((i + s) % len, true);
                }
            }
            v
        })
        .collect()
}

fn reverse_poly(p: u64) -> u64 {
    let d = degree(p);
    (0..=d).filter(|i| (p >> i) & 1 == 1).map(|i| 1u64 << (d - i)).sum()
}

/// Parity-check rows formed by the 11 cyclic shifts of the reversed
/// coefficient vector of `h1`.
pub fn golay_parity_check_from_h1() -> Vec<BitVec> {
    cyclic_shifts(reverse_poly(GOLAY_H1), GOLAY_LEN - degree(GOLAY_H1), GOLAY_LEN)
}

/// Parity-check rows obtained from the generator polynomial
/// `g(x) = (x^23 + 1) / h1(x)`: the generator matrix is the 12 shifts of `g`
/// and the checks span its orthogonal complement.
pub fn golay_parity_check_from_generator() -> Result<Vec<BitVec>> {
    let (g, rem) = poly_divmod((1 << GOLAY_LEN) | 1, GOLAY_H1);
    if rem != 0 {
        return Err(CodeError::Construction("h1(x) does not divide x^23 + 1".into()));
    }
    let k = GOLAY_LEN - degree(g);
    let generator = cyclic_shifts(g, k, GOLAY_LEN);
    Ok(gf2::nullspace(&generator, GOLAY_LEN))
}

/// Generator rows of the classical code `ker(h)`.
pub fn classical_code_generators(parity_check: &[BitVec], len: usize) -> Vec<BitVec> {
    gf2::nullspace(parity_check, len)
}

/// Confirms `h` checks a dual-containing `[23,12,7]` code.
pub fn validate_golay_parity_check(h: &[BitVec]) -> Result<()> {
    let rank = gf2::rank(h);
    if rank != 11 {
        return Err(CodeError::Construction(format!("parity-check rank {rank}, expected 11")));
    }
    for (i, a) in h.iter().enumerate() {
        for b in &h[i..] {
            if a.dot(b) {
                return Err(CodeError::Construction("classical code is not dual-containing".into()));
            }
        }
    }
    let d = classical_distance(&classical_code_generators(h, GOLAY_LEN))?;
    if d != 7 {
        return Err(CodeError::Construction(format!("classical distance {d}, expected 7")));
    }
    Ok(())
}

/// The [[23,1,7]] CSS code built from the binary Golay code: 11 X-type rows
/// followed by 11 Z-type rows.
pub fn build_golay_code() -> Result<CheckMatrix> {
    let h = golay_parity_check_from_h1();
    let h = match validate_golay_parity_check(&h) {
        Ok(()) => h,
        Err(_) => {
            let h = golay_parity_check_from_generator()?;
            validate_golay_parity_check(&h)?;
            h
        }
    };
    css_from_self_orthogonal(&h)
}

/// CSS code with X-type and Z-type generators both equal to the rows of a
/// self-orthogonal binary matrix.
pub fn css_from_self_orthogonal(h: &[BitVec]) -> Result<CheckMatrix> {
    let n = h.first().map(BitVec::len).ok_or_else(|| CodeError::Construction("no checks".into()))?;
    if Echelon::from_rows(n, h).rank() != h.len() {
        return Err(CodeError::Construction("classical checks are dependent".into()));
    }
    let zero = BitVec::zeros(n);
    let mut rows = Vec::with_capacity(2 * h.len());
    for r in h {
        rows.push(PauliVector::from_parts(r.clone(), zero.clone())?);
    }
    for r in h {
        rows.push(PauliVector::from_parts(zero.clone(), r.clone())?);
    }
    CheckMatrix::new(rows).map_err(|e| CodeError::Construction(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h1_divides_x23_plus_1() {
        let (g, rem) = poly_divmod((1 << 23) | 1, GOLAY_H1);
        assert_eq!(rem, 0);
        assert_eq!(degree(g), 11);
        assert_eq!(GOLAY_H1.count_ones(), 8);
    }

    #[test]
    fn both_golay_routes_validate() {
        validate_golay_parity_check(&golay_parity_check_from_h1()).unwrap();
        validate_golay_parity_check(&golay_parity_check_from_generator().unwrap()).unwrap();
    }

    #[test]
    fn golay_checks_have_weight_eight() {
        for row in golay_parity_check_from_h1() {
            assert_eq!(row.count_ones(), 8);
        }
    }

    #[test]
    fn unknown_builtin() {
        assert!(builtin("steane").is_err());
    }
}
