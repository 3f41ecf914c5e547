//! Matrix-multiply kernels shared by the forward and backward passes.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::scalar::Real;

static DETERMINISTIC: AtomicBool = AtomicBool::new(false);

/// Strict-deterministic mode: disables intra-op parallelism so results do
/// not depend on the thread count.
pub fn set_deterministic(on: bool) {
    DETERMINISTIC.store(on, Ordering::SeqCst);
}

pub fn is_deterministic() -> bool {
    DETERMINISTIC.load(Ordering::SeqCst)
}

const PARALLEL_MIN_FLOPS: usize = 1 << 22;

/// `c[m×n] (+)= op(a) · op(b)` where `op(a)` is `m×k` and `op(b)` is `k×n`.
/// `a` is stored row-major as `m×k`, or `k×m` when `a_t`; likewise `b` as
/// `k×n`, or `n×k` when `b_t`. `c` is contiguous row-major.
#[allow(clippy::too_many_arguments)]
pub(crate) fn matmul_into<T: Real>(
    a: &[T],
    a_t: bool,
    b: &[T],
    b_t: bool,
    m: usize,
    k: usize,
    n: usize,
    c: &mut [T],
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let beta = if accumulate { T::one() } else { T::zero() };
    if k == 0 {
        if !accumulate {
            c.iter_mut().for_each(|x| *x = T::zero());
        }
        return;
    }
    let (rsa, csa) = if a_t { (1isize, m as isize) } else { (k as isize, 1isize) };
    let (rsb, csb) = if b_t { (1isize, k as isize) } else { (n as isize, 1isize) };

    let threads = rayon::current_num_threads();
    if is_deterministic() || threads < 2 || m * n * k < PARALLEL_MIN_FLOPS || m < 2 * threads {
        // SAFETY: slices have the lengths asserted above and strides stay in bounds.
        unsafe {
            T::gemm(m, k, n, T::one(), a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1);
        }
        return;
    }
    let rows_per = m.div_ceil(threads);
    c.par_chunks_mut(rows_per * n).enumerate().for_each(|(chunk, c_rows)| {
        let r0 = chunk * rows_per;
        let rows = c_rows.len() / n;
        let a_off = if a_t { r0 } else { r0 * k };
        // SAFETY: the row block [r0, r0 + rows) lies within `a` and `c_rows`.
        unsafe {
            T::gemm(
                rows,
                k,
                n,
                T::one(),
                a.as_ptr().add(a_off),
                rsa,
                csa,
                b.as_ptr(),
                rsb,
                csb,
                beta,
                c_rows.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for l in 0..k {
                    c[i * n + j] += a[i * k + l] * b[l * n + j];
                }
            }
        }
        c
    }

    fn transpose(a: &[f64], r: usize, c: usize) -> Vec<f64> {
        let mut t = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                t[j * r + i] = a[i * c + j];
            }
        }
        t
    }

    #[test]
    fn all_transpose_combinations_match_naive() {
        let (m, k, n) = (5, 3, 4);
        let a: Vec<f64> = (0..m * k).map(|i| i as f64 * 0.5 - 2.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64).sin()).collect();
        let want = naive(&a, &b, m, k, n);
        for (at, bt) in [(false, false), (true, false), (false, true), (true, true)] {
            let aa = if at { transpose(&a, m, k) } else { a.clone() };
            let bb = if bt { transpose(&b, k, n) } else { b.clone() };
            let mut c = vec![0.0; m * n];
            matmul_into(&aa, at, &bb, bt, m, k, n, &mut c, false);
            for (x, y) in c.iter().zip(&want) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
