//! Exhaustive ℓ0 recovery for tiny instances, used as a test oracle.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

pub const MAX_N: usize = 20;
pub const MAX_SPARSITY: usize = 4;
/// Residual below which a support is considered to fit exactly.
pub const FIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum L0Solution {
    Found { r: Vec<C64>, support: Vec<usize> },
    /// No support of size `<= s_max` reproduces `y`.
    NoSolution,
}

/// Sparsest `r` with `A r = y`, searching all supports of size `<= s_max`
/// in increasing size and lexicographic order.
pub fn l0_oracle(y: &[C64], dense_op: &DMatrix<C64>, s_max: usize) -> Result<L0Solution> {
    let (m, n) = dense_op.shape();
    if y.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            actual: y.len(),
        });
    }
    if n > MAX_N || s_max > MAX_SPARSITY {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search limited to n <= {MAX_N}, s_max <= {MAX_SPARSITY}"
        )));
    }
    let target = DVector::from_column_slice(y);
    let tol = FIT_TOL * target.norm().max(1.0);
    if target.norm() <= tol {
        return Ok(L0Solution::Found {
            r: vec![C64::default(); n],
            support: Vec::new(),
        });
    }
    for size in 1..=s_max.min(m) {
        for support in (0..n).combinations(size) {
            let sub = dense_op.select_columns(&support);
            let Some(coef) = least_squares(sub.clone(), &target) else {
                continue;
            };
            if (&sub * &coef - &target).norm() <= tol {
                let mut r = vec![C64::default(); n];
                for (&j, c) in support.iter().zip(coef.iter()) {
                    r[j] = *c;
                }
                return Ok(L0Solution::Found { r, support });
            }
        }
    }
    Ok(L0Solution::NoSolution)
}

fn least_squares(a: DMatrix<C64>, b: &DVector<C64>) -> Option<DVector<C64>> {
    a.svd(true, true).solve(b, 1e-12).ok()
}
