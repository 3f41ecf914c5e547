//! Stabilizer codes with one logical qubit.

use crate::bits::BitVec;
use crate::error::{check_dim, CodeError, Result};
use crate::gf2::Echelon;
use crate::pauli::{PauliVector, Syndrome};

/// Check matrix of an `[[n, 1]]` stabilizer code: `n − 1` commuting,
/// independent generators plus one logical X / logical Z representative.
#[derive(Clone, Debug)]
pub struct CheckMatrix {
    n: usize,
    rows: Vec<PauliVector>,
    logical_x: PauliVector,
    logical_z: PauliVector,
    span: Echelon,
}

impl PartialEq for CheckMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.rows == other.rows
            && self.logical_x == other.logical_x
            && self.logical_z == other.logical_z
    }
}

impl Eq for CheckMatrix {}

impl CheckMatrix {
    /// Validates `rows` as the generators of an `[[n, 1]]` code and derives
    /// logical representatives.
    pub fn new(rows: Vec<PauliVector>) -> Result<Self> {
        let n = validate_rows(&rows)?;
        if rows.len() + 1 != n {
            return Err(CodeError::Unsupported(format!(
                "{} independent generators on {n} qubits encode {} logical qubits; only k = 1 is supported",
                rows.len(),
                n - rows.len()
            )));
        }
        let (logical_x, logical_z) = derive_logicals(&rows)?;
        let span = Echelon::from_rows(2 * n, rows.iter().map(PauliVector::to_bitvec).collect::<Vec<_>>().iter());
        Ok(Self {
            n,
            rows,
            logical_x,
            logical_z,
            span,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[PauliVector] {
        &self.rows
    }

    pub fn logical_x(&self) -> &PauliVector {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &PauliVector {
        &self.logical_z
    }

    /// `S^X_{i,j}`: whether generator `i` has an X component on qubit `j`.
    pub fn s_x(&self, i: usize, j: usize) -> bool {
        self.rows[i].x_part().get(j)
    }

    /// `S^Z_{i,j}`: whether generator `i` has a Z component on qubit `j`.
    pub fn s_z(&self, i: usize, j: usize) -> bool {
        self.rows[i].z_part().get(j)
    }

    /// Coefficient of error coordinate `j` (of `2n`) in the parity sum of
    /// generator `i`: an X error anticommutes with Z components and vice versa.
    pub fn parity_coefficient(&self, i: usize, j: usize) -> bool {
        if j < self.n {
            self.s_z(i, j)
        } else {
            self.s_x(i, j - self.n)
        }
    }

    pub fn syndrome(&self, e: &PauliVector) -> Result<Syndrome> {
        check_dim(self.n, e.n())?;
        let mut s = BitVec::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.symplectic_unchecked(e) {
                s.set(i, true);
            }
        }
        Ok(Syndrome::from_bitvec(s))
    }

    pub fn is_in_stabilizer_group(&self, r: &PauliVector) -> Result<bool> {
        check_dim(self.n, r.n())?;
        Ok(self.span.contains(&r.to_bitvec()))
    }

    /// Minimum weight over the coset `rep · S` of the stabilizer group.
    pub fn min_coset_weight(&self, rep: &PauliVector) -> Result<usize> {
        check_dim(self.n, rep.n())?;
        let mut best = usize::MAX;
        crate::distance::for_each_group_element(self, rep, |w| best = best.min(w))?;
        Ok(best)
    }
}

/// Checks shape, commutation and independence; returns `n`.
fn validate_rows(rows: &[PauliVector]) -> Result<usize> {
    let first = rows
        .first()
        .ok_or_else(|| CodeError::Unsupported("no generators given".into()))?;
    let n = first.n();
    for r in rows {
        check_dim(n, r.n())?;
    }
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            if rows[i].symplectic_unchecked(&rows[j]) {
                return Err(CodeError::NonCommuting(i, j));
            }
        }
    }
    let flat: Vec<BitVec> = rows.iter().map(PauliVector::to_bitvec).collect();
    let rank = Echelon::from_rows(2 * n, flat.iter()).rank();
    if rank < rows.len() {
        return Err(CodeError::DependentRows {
            rank,
            rows: rows.len(),
        });
    }
    Ok(n)
}

/// Builds a code from arbitrary generator rows.
pub fn build_custom(rows: Vec<PauliVector>) -> Result<CheckMatrix> {
    CheckMatrix::new(rows)
}

/// Logical X and logical Z representatives for a commuting independent
/// generator set with exactly one encoded qubit. Pure X-type / Z-type
/// representatives are preferred when they exist.
pub fn derive_logicals(rows: &[PauliVector]) -> Result<(PauliVector, PauliVector)> {
    let n = validate_rows(rows)?;
    let flat: Vec<BitVec> = rows.iter().map(PauliVector::to_bitvec).collect();
    let span = Echelon::from_rows(2 * n, flat.iter());

    // v commutes with row r iff swap(r) · v = 0.
    let swapped: Vec<BitVec> = rows.iter().map(|r| r.swapped().to_bitvec()).collect();
    let kernel = Echelon::from_rows(2 * n, swapped.iter()).nullspace();
    let k2 = kernel.len() - span.rank();
    if k2 != 2 {
        return Err(CodeError::Unsupported(format!(
            "code encodes {} logical qubits; only k = 1 is supported",
            k2 / 2
        )));
    }

    let zeros = BitVec::zeros(n);
    let z_parts: Vec<BitVec> = rows.iter().map(|r| r.z_part().clone()).collect();
    let x_parts: Vec<BitVec> = rows.iter().map(|r| r.x_part().clone()).collect();

    let pure_x = Echelon::from_rows(n, z_parts.iter())
        .nullspace()
        .into_iter()
        .map(|x| PauliVector::from_parts(x, zeros.clone()).expect("n > 0"))
        .find(|p| !span.contains(&p.to_bitvec()));

    let logical_x = match pure_x {
        Some(p) => p,
        None => kernel
            .iter()
            .find(|v| !span.contains(v))
            .map(|v| PauliVector::from_bitvec(v).expect("even length"))
            .ok_or_else(|| CodeError::Unsupported("no logical operator found".into()))?,
    };

    let pure_z = Echelon::from_rows(n, x_parts.iter())
        .nullspace()
        .into_iter()
        .map(|z| PauliVector::from_parts(zeros.clone(), z).expect("n > 0"))
        .find(|p| p.symplectic_unchecked(&logical_x));

    let logical_z = match pure_z {
        Some(p) => p,
        None => kernel
            .iter()
            .map(|v| PauliVector::from_bitvec(v).expect("even length"))
            .find(|p| p.symplectic_unchecked(&logical_x))
            .ok_or_else(|| CodeError::Unsupported("degenerate logical pair".into()))?,
    };
    Ok((logical_x, logical_z))
}

/// Syndrome of `e` with respect to `code`.
pub fn syndrome(code: &CheckMatrix, e: &PauliVector) -> Result<Syndrome> {
    code.syndrome(e)
}

pub fn is_in_stabilizer_group(code: &CheckMatrix, r: &PauliVector) -> Result<bool> {
    code.is_in_stabilizer_group(r)
}
