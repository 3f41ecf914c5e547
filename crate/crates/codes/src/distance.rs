//! Exhaustive distance checks by enumerating the stabilizer group.

use crate::bits::BitVec;
use crate::code::CheckMatrix;
use crate::error::{CodeError, Result};
use crate::pauli::PauliVector;

/// Largest generator count accepted for exhaustive enumeration.
pub const MAX_ENUMERATION_ROWS: usize = 32;

/// Calls `visit` with the weight of every element of `rep · S`, walking the
/// `2^(n−1)` stabilizer products in Gray-code order.
pub(crate) fn for_each_group_element(
    code: &CheckMatrix,
    rep: &PauliVector,
    mut visit: impl FnMut(usize),
) -> Result<()> {
    let rows = code.rows();
    if rows.len() > MAX_ENUMERATION_ROWS {
        return Err(CodeError::Resource(format!(
            "enumerating 2^{} group elements exceeds the 2^{MAX_ENUMERATION_ROWS} limit",
            rows.len()
        )));
    }
    let words = rep.x_part().words().len();
    let pack = |p: &PauliVector| -> Vec<u64> {
        p.x_part().words().iter().chain(p.z_part().words()).copied().collect()
    };
    let packed: Vec<Vec<u64>> = rows.iter().map(pack).collect();
    let mut cur = pack(rep);
    let weight = |v: &[u64]| -> usize {
        (0..words).map(|i| (v[i] | v[i + words]).count_ones() as usize).sum()
    };
    visit(weight(&cur));
    for step in 1u64..(1u64 << rows.len()) {
        let flip = step.trailing_zeros() as usize;
        for (c, r) in cur.iter_mut().zip(&packed[flip]) {
            *c ^= r;
        }
        visit(weight(&cur));
    }
    Ok(())
}

/// Minimum weight of a non-trivial logical operator: the least weight over
/// the cosets of logical X, logical Z and their product.
pub fn code_distance(code: &CheckMatrix) -> Result<usize> {
    let y = code.logical_x().mul(code.logical_z())?;
    let mut best = usize::MAX;
    for rep in [code.logical_x(), code.logical_z(), &y] {
        best = best.min(code.min_coset_weight(rep)?);
    }
    Ok(best)
}

/// Minimum nonzero Hamming weight of the binary linear code spanned by
/// `generators` (assumed independent), by enumerating all `2^k` codewords.
pub fn classical_distance(generators: &[BitVec]) -> Result<usize> {
    if generators.len() > MAX_ENUMERATION_ROWS {
        return Err(CodeError::Resource(format!(
            "2^{} codewords exceed the enumeration limit",
            generators.len()
        )));
    }
    let Some(first) = generators.first() else {
        return Err(CodeError::Unsupported("empty generator set".into()));
    };
    let mut cur = BitVec::zeros(first.len());
    let mut best = usize::MAX;
    for step in 1u64..(1u64 << generators.len()) {
        cur.xor_assign(&generators[step.trailing_zeros() as usize]);
        let w = cur.count_ones();
        if w > 0 {
            best = best.min(w);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_custom;

    fn p(s: &str) -> PauliVector {
        PauliVector::from_pauli_str(s).unwrap()
    }

    #[test]
    fn repetition_code_distance_is_one() {
        // Bit-flip repetition code: Z errors are undetectable.
        let code = build_custom(vec![p("ZZI"), p("IZZ")]).unwrap();
        assert_eq!(code_distance(&code).unwrap(), 1);
        assert_eq!(code.min_coset_weight(code.logical_x()).unwrap(), 3);
    }

    #[test]
    fn five_qubit_code_distance_is_three() {
        let rows = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"].map(p).to_vec();
        let code = build_custom(rows).unwrap();
        assert_eq!(code_distance(&code).unwrap(), 3);
    }

    #[test]
    fn hamming_code_distance() {
        let g: Vec<BitVec> = ["1110000", "1001100", "0101010", "1101001"]
            .iter()
            .map(|s| BitVec::from_bits(&s.bytes().map(|b| b - b'0').collect::<Vec<_>>()))
            .collect();
        assert_eq!(classical_distance(&g).unwrap(), 3);
    }
}
