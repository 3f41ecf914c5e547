//! Gaussian elimination over GF(2).

use crate::bits::BitVec;

/// Reduced row-echelon basis of a growing subspace. Every stored row has a
/// distinct pivot bit and no other stored row has that bit set.
#[derive(Clone, Debug)]
pub struct Echelon {
    len: usize,
    rows: Vec<BitVec>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn from_rows<'a>(len: usize, rows: impl IntoIterator<Item = &'a BitVec>) -> Self {
        let mut e = Self::new(len);
        for r in rows {
            e.insert(r);
        }
        e
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Residue of `v` modulo the span; zero iff `v` is in the span.
    pub fn reduce(&self, v: &BitVec) -> BitVec {
        let mut r = v.clone();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if r.get(p) {
                r.xor_assign(row);
            }
        }
        r
    }

    pub fn contains(&self, v: &BitVec) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v` to the span. Returns `false` if it was already contained.
    pub fn insert(&mut self, v: &BitVec) -> bool {
        debug_assert_eq!(v.len(), self.len);
        let r = self.reduce(v);
        let Some(p) = r.first_one() else {
            return false;
        };
        for row in &mut self.rows {
            if row.get(p) {
                row.xor_assign(&r);
            }
        }
        self.rows.push(r);
        self.pivots.push(p);
        true
    }

    /// Basis of the orthogonal complement `{v : row · v = 0 for every row}`.
    pub fn nullspace(&self) -> Vec<BitVec> {
        let mut is_pivot = vec![false; self.len];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.len)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = BitVec::zeros(self.len);
                v.set(f, true);
                for (row, &p) in self.rows.iter().zip(&self.pivots) {
                    if row.get(f) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }
}

pub fn rank(rows: &[BitVec]) -> usize {
    match rows.first() {
        Some(r) => Echelon::from_rows(r.len(), rows).rank(),
        None => 0,
    }
}

/// Basis of `{v : r · v = 0 for all r in rows}` for vectors of length `len`.
pub fn nullspace(rows: &[BitVec], len: usize) -> Vec<BitVec> {
    Echelon::from_rows(len, rows).nullspace()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BitVec {
        BitVec::from_bits(&s.bytes().map(|b| b - b'0').collect::<Vec<_>>())
    }

    #[test]
    fn rank_of_dependent_rows() {
        let rows = [bv("1100"), bv("0110"), bv("1010")];
        assert_eq!(rank(&rows), 2);
    }

    #[test]
    fn membership() {
        let e = Echelon::from_rows(4, &[bv("1100"), bv("0110")]);
        assert!(e.contains(&bv("1010")));
        assert!(!e.contains(&bv("0001")));
        assert!(e.contains(&BitVec::zeros(4)));
    }

    #[test]
    fn nullspace_is_orthogonal_with_full_dimension() {
        let rows = [bv("11010"), bv("01101"), bv("11010")];
        let ns = nullspace(&rows, 5);
        assert_eq!(ns.len(), 5 - 2);
        for v in &ns {
            for r in &rows {
                assert!(!r.dot(v));
            }
        }
        assert_eq!(rank(&ns), 3);
    }
}
