//! Test-only reference implementations that share no code with the library solvers.
#![allow(dead_code)]

use cwss::C64;
use nalgebra::{DMatrix, DVector};

/// Dense Chambolle–Pock solver for
/// `min Σ w_g ‖x_g‖₂  s.t. ‖A x − y‖₂ ≤ η` with groups given as index ranges.
pub fn dense_group_solve(
    a: &DMatrix<C64>,
    y: &[C64],
    groups: &[std::ops::Range<usize>],
    weights: &[f64],
    eta: f64,
    iters: usize,
) -> Vec<C64> {
    let n = a.ncols();
    let b = DVector::from_column_slice(y);
    let ah = a.adjoint();
    let op_norm = a.clone().svd(false, false).singular_values.max();
    let step = 0.99 / op_norm;
    let (tau, sigma) = (step, step);

    let mut x = DVector::<C64>::zeros(n);
    let mut x_bar = x.clone();
    let mut z = DVector::<C64>::zeros(a.nrows());
    for _ in 0..iters {
        // Dual step: prox of the conjugate of the ball indicator, via Moreau.
        let v = &z + (a * &x_bar) * C64::from(sigma);
        let w = &v / C64::from(sigma);
        let proj = project_ball(&w, &b, eta);
        z = v - proj * C64::from(sigma);

        let x_old = x.clone();
        let mut u = &x - (&ah * &z) * C64::from(tau);
        for (g, &wt) in groups.iter().zip(weights) {
            let norm = u.rows(g.start, g.len()).norm();
            let scale = if norm > tau * wt { 1.0 - tau * wt / norm } else { 0.0 };
            for i in g.clone() {
                u[i] *= scale;
            }
        }
        x = u;
        x_bar = &x * C64::from(2.0) - x_old;
    }
    x.iter().copied().collect()
}

fn project_ball(w: &DVector<C64>, center: &DVector<C64>, eta: f64) -> DVector<C64> {
    let d = w - center;
    let norm = d.norm();
    if norm <= eta {
        w.clone()
    } else {
        center + d * C64::from(eta / norm)
    }
}

pub fn group_objective(x: &[C64], groups: &[std::ops::Range<usize>], weights: &[f64]) -> f64 {
    groups
        .iter()
        .zip(weights)
        .map(|(g, w)| w * x[g.clone()].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .sum()
}

pub fn singletons(n: usize) -> Vec<std::ops::Range<usize>> {
    (0..n).map(|i| i..i + 1).collect()
}

pub fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense `A r`.
pub fn apply(a: &DMatrix<C64>, r: &[C64]) -> Vec<C64> {
    (a * DVector::from_column_slice(r)).iter().copied().collect()
}
