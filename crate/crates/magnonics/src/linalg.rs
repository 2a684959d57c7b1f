//! Minimal dense complex linear solve, enough for the (N+1)-mode response
//! matrices assembled in this crate.

use num_complex::Complex64 as C64;

/// Solve `a x = b` by Gaussian elimination with partial pivoting. `a` is
/// row-major `n x n` and is consumed along with `b`.
///
/// The response matrices built here are provably nonsingular for positive
/// linewidths (every eigenvalue has a strictly negative imaginary part while
/// the drive frequency is real), so a vanishing pivot is a logic error and
/// asserts rather than returning.
#[allow(clippy::needless_range_loop)]
pub(crate) fn solve_dense(mut a: Vec<C64>, mut b: Vec<C64>) -> Vec<C64> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix/vector size mismatch");
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .norm_sqr()
                    .total_cmp(&a[j * n + col].norm_sqr())
            })
            .unwrap();
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        assert!(pivot.norm_sqr() > 0.0, "singular response matrix");
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == C64::ZERO {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= factor * v;
            }
            let bc = b[col];
            b[row] -= factor * bc;
        }
    }
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum -= a[col * n + k] * b[k];
        }
        b[col] = sum / a[col * n + col];
    }
    b
}
