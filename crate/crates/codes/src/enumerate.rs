//! Enumeration of Pauli errors by weight.

use crate::pauli::{Pauli, PauliVector};

const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

/// Visits every `n`-qubit Pauli error of exactly weight `w` (there are
/// `C(n, w) · 3^w` of them), in lexicographic order of support then Pauli.
pub fn for_each_error_of_weight(n: usize, w: usize, mut visit: impl FnMut(&PauliVector)) {
    if w > n {
        return;
    }
    let mut e = PauliVector::identity(n);
    recurse(n, w, 0, &mut e, &mut visit);
}

fn recurse(n: usize, remaining: usize, start: usize, e: &mut PauliVector, visit: &mut impl FnMut(&PauliVector)) {
    if remaining == 0 {
        visit(e);
        return;
    }
    for q in start..=n - remaining {
        for p in NON_IDENTITY {
            e.set_qubit(q, p);
            recurse(n, remaining - 1, q + 1, e, visit);
        }
        e.set_qubit(q, Pauli::I);
    }
}

/// Visits every error of weight `0..=max_weight`.
pub fn for_each_error_up_to_weight(n: usize, max_weight: usize, mut visit: impl FnMut(&PauliVector)) {
    for w in 0..=max_weight.min(n) {
        for_each_error_of_weight(n, w, &mut visit);
    }
}

/// `C(n, w) · 3^w`.
pub fn count_errors_of_weight(n: usize, w: usize) -> u64 {
    if w > n {
        return 0;
    }
    let mut c: u64 = 1;
    for i in 0..w as u64 {
        c = c * (n as u64 - i) / (i + 1);
    }
    c * 3u64.pow(w as u32)
}
