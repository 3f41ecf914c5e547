//! Pauli operators in binary-symplectic form and syndromes.

use std::fmt;

use crate::bits::BitVec;
use crate::error::{check_dim, CodeError, Result};

/// An `n`-qubit Pauli operator (phase ignored) as `2n` bits: the first `n`
/// mark X components, the last `n` mark Z components. A Y on qubit `j` sets
/// both bit `j` and bit `j + n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliVector {
    x: BitVec,
    z: BitVec,
}

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl PauliVector {
    pub fn identity(n: usize) -> Self {
        Self {
            x: BitVec::zeros(n),
            z: BitVec::zeros(n),
        }
    }

    pub fn from_parts(x: BitVec, z: BitVec) -> Result<Self> {
        check_dim(x.len(), z.len())?;
        if x.is_empty() {
            return Err(CodeError::Unsupported("zero-qubit operator".into()));
        }
        Ok(Self { x, z })
    }

    /// Parses a length-`2n` sequence of 0/1 values (X-part then Z-part).
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() || !bits.len().is_multiple_of(2) {
            return Err(CodeError::DimensionMismatch {
                expected: bits.len() + bits.len() % 2,
                found: bits.len(),
            });
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(CodeError::Unsupported(format!("non-binary entry {b}")));
        }
        let n = bits.len() / 2;
        Ok(Self {
            x: BitVec::from_bits(&bits[..n]),
            z: BitVec::from_bits(&bits[n..]),
        })
    }

    /// Builds an operator from a Pauli string such as `"XIZY"`.
    pub fn from_pauli_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut v = Self::identity(n.max(1));
        if n == 0 {
            return Err(CodeError::Unsupported("empty Pauli string".into()));
        }
        for (j, c) in s.chars().enumerate() {
            let p = match c {
                'I' | '_' | '.' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(CodeError::Unsupported(format!("bad Pauli letter {other:?}"))),
            };
            v.set_qubit(j, p);
        }
        Ok(v)
    }

    /// Single-qubit operator `p` on qubit `j`.
    pub fn single(n: usize, j: usize, p: Pauli) -> Self {
        let mut v = Self::identity(n);
        v.set_qubit(j, p);
        v
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x_part(&self) -> &BitVec {
        &self.x
    }

    pub fn z_part(&self) -> &BitVec {
        &self.z
    }

    pub fn qubit(&self, j: usize) -> Pauli {
        match (self.x.get(j), self.z.get(j)) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    pub fn set_qubit(&mut self, j: usize, p: Pauli) {
        let (x, z) = match p {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Z => (false, true),
            Pauli::Y => (true, true),
        };
        self.x.set(j, x);
        self.z.set(j, z);
    }

    /// Entry `i` of the `2n`-bit layout.
    pub fn bit(&self, i: usize) -> bool {
        let n = self.n();
        if i < n {
            self.x.get(i)
        } else {
            self.z.get(i - n)
        }
    }

    pub fn flip_bit(&mut self, i: usize) {
        let n = self.n();
        if i < n {
            self.x.flip(i)
        } else {
            self.z.flip(i - n)
        }
    }

    pub fn to_bits(&self) -> Vec<u8> {
        let mut out = self.x.to_bits();
        out.extend(self.z.to_bits());
        out
    }

    /// The `2n` bits as one packed vector.
    pub fn to_bitvec(&self) -> BitVec {
        self.x.concat(&self.z)
    }

    pub fn from_bitvec(v: &BitVec) -> Result<Self> {
        if v.is_empty() || !v.len().is_multiple_of(2) {
            return Err(CodeError::DimensionMismatch {
                expected: v.len() + v.len() % 2,
                found: v.len(),
            });
        }
        let n = v.len() / 2;
        Ok(Self {
            x: v.slice(0, n),
            z: v.slice(n, n),
        })
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> usize {
        self.x.or(&self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Operator product up to phase.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.n(), other.n())?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        Self {
            x: self.x.xor(&other.x),
            z: self.z.xor(&other.z),
        }
    }

    /// The operator with X and Z parts exchanged; `a.swapped()` dotted with `b`
    /// is the symplectic product.
    pub(crate) fn swapped(&self) -> Self {
        Self {
            x: self.z.clone(),
            z: self.x.clone(),
        }
    }

    #[inline]
    pub(crate) fn symplectic_unchecked(&self, other: &Self) -> bool {
        self.x.dot(&other.z) ^ self.z.dot(&other.x)
    }
}

/// Symplectic inner product of two operators: `false` when they commute.
pub fn symplectic_product(a: &PauliVector, b: &PauliVector) -> Result<bool> {
    check_dim(a.n(), b.n())?;
    Ok(a.symplectic_unchecked(b))
}

impl fmt::Debug for PauliVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliVector({self})")
    }
}

impl fmt::Display for PauliVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.n() {
            let c = match self.qubit(j) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Syndrome bits, one per generator (eigenvalue +1 → 0, −1 → 1).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Syndrome(BitVec);

impl Syndrome {
    pub fn zeros(len: usize) -> Self {
        Self(BitVec::zeros(len))
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Self(BitVec::from_bits(bits))
    }

    pub fn from_bitvec(bits: BitVec) -> Self {
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0.get(i)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn bits(&self) -> &BitVec {
        &self.0
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.0.to_bits()
    }

    /// Syndrome packed into an integer (bit `i` = generator `i`); needs at
    /// most 64 generators.
    pub fn to_index(&self) -> u64 {
        self.0.to_u64()
    }

    pub fn from_index(index: u64, len: usize) -> Self {
        Self(BitVec::from_u64(index, len))
    }
}

impl fmt::Debug for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Syndrome({})", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_commutes_with_everything() {
        let id = PauliVector::identity(3);
        let p = PauliVector::from_pauli_str("XYZ").unwrap();
        assert!(!symplectic_product(&id, &p).unwrap());
    }

    #[test]
    fn x_and_z_on_same_qubit_anticommute() {
        let x = PauliVector::from_pauli_str("XI").unwrap();
        let z = PauliVector::from_pauli_str("ZI").unwrap();
        let zz = PauliVector::from_pauli_str("ZZ").unwrap();
        let xx = PauliVector::from_pauli_str("XX").unwrap();
        assert!(symplectic_product(&x, &z).unwrap());
        assert!(!symplectic_product(&xx, &zz).unwrap());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let a = PauliVector::identity(3);
        let b = PauliVector::identity(4);
        assert_eq!(
            symplectic_product(&a, &b),
            Err(CodeError::DimensionMismatch { expected: 3, found: 4 })
        );
    }

    #[test]
    fn y_sets_both_bits() {
        let y = PauliVector::single(4, 2, Pauli::Y);
        assert_eq!(y.to_bits(), vec![0, 0, 1, 0, 0, 0, 1, 0]);
        assert_eq!(y.weight(), 1);
    }

    #[test]
    fn bits_round_trip_and_validation() {
        let bits = [1, 0, 1, 0, 0, 1];
        let p = PauliVector::from_bits(&bits).unwrap();
        assert_eq!(p.to_string(), "XIY");
        assert_eq!(p.to_bits(), bits);
        assert!(PauliVector::from_bits(&[1, 0, 1]).is_err());
        assert!(PauliVector::from_bits(&[2, 0]).is_err());
    }
}
