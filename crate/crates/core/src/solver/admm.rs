//! ADMM for `min f(x) + 1_C(z)  s.t. x = z`, where `f` is the weighted
//! group norm and `C = {r : ‖A r − y‖₂ ≤ η}`.
//!
//! Both proximal maps are closed form. The `x` step is block
//! soft-thresholding. Because the rows of `A` are orthonormal, the
//! projection onto `C` only moves the row-space component:
//! `P_C(v) = v − Aᴴ e (1 − η/‖e‖)` with `e = A v − y` whenever `‖e‖ > η`.
//!
//! The instance is rescaled to `‖y‖₂ = 1` and smallest weight one before
//! iterating, so the penalty parameter is dimensionless and the result is
//! exactly equivariant under scaling of `(y, η)`.

use crate::sampling::Workspace;
use crate::solver::{GroupProblem, IterationRecord, SolverOptions, SpectrumEstimate, FEASIBILITY_SLACK};
use crate::{norm2, C64};

const RHO_MU: f64 = 10.0;
const RHO_TAU: f64 = 2.0;
const RHO_CHECK_EVERY: usize = 10;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;

/// Proximal map of `tau·‖·‖₂`: shrinks `v` towards zero by `tau`.
pub fn block_shrink(v: &mut [C64], tau: f64) {
    let norm = norm2(v);
    let keep = if norm > tau { 1.0 - tau / norm } else { 0.0 };
    v.iter_mut().for_each(|c| *c *= keep);
}

pub(super) fn run(p: &GroupProblem<'_>, opts: &SolverOptions, warm: Option<&[C64]>) -> SpectrumEstimate {
    let n = p.op.n();
    let m = p.op.m();
    let y_norm = norm2(p.y);

    // r = 0 is feasible, hence optimal.
    if p.eta >= y_norm {
        return SpectrumEstimate {
            r_hat: vec![C64::default(); n],
            residual_norm: y_norm,
            objective: 0.0,
            inner_iters_used: 0,
            converged: true,
            trace: Vec::new(),
        };
    }

    let scale = y_norm;
    let y: Vec<C64> = p.y.iter().map(|c| c / scale).collect();
    let eta = p.eta / scale;
    let w_min = p.weights.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = p.weights.iter().map(|w| w / w_min).collect();

    let mut ws = Workspace::default();
    let mut e = vec![C64::default(); m];
    let mut back = vec![C64::default(); n];

    let mut x = vec![C64::default(); n];
    let mut z = match warm {
        Some(w) => w.iter().map(|c| c / scale).collect(),
        None => vec![C64::default(); n],
    };
    project(p, &y, eta, &mut z, &mut e, &mut back, &mut ws);
    let mut u = vec![C64::default(); n];
    let mut z_old = z.clone();
    let mut rho = opts.admm_rho;

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iters = 0;

    for k in 1..=opts.max_inner_iters {
        iters = k;

        // x = prox_{f/rho}(z − u)
        for ((xi, zi), ui) in x.iter_mut().zip(&z).zip(&u) {
            *xi = zi - ui;
        }
        for (s, w) in p.plan.sections().zip(&weights) {
            block_shrink(&mut x[s], w / rho);
        }

        // z = P_C(x + u)
        std::mem::swap(&mut z, &mut z_old);
        for ((zi, xi), ui) in z.iter_mut().zip(&x).zip(&u) {
            *zi = xi + ui;
        }
        project(p, &y, eta, &mut z, &mut e, &mut back, &mut ws);

        let mut pri_sq = 0.0;
        let mut dz_sq = 0.0;
        for i in 0..n {
            let d = x[i] - z[i];
            u[i] += d;
            pri_sq += d.norm_sqr();
            dz_sq += (z[i] - z_old[i]).norm_sqr();
        }
        let primal = pri_sq.sqrt();
        let dual = rho * dz_sq.sqrt();
        let x_norm = norm2(&x);
        let z_norm = norm2(&z);
        let u_norm = norm2(&u);
        let eps_pri = opts.inner_tol * x_norm.max(z_norm);
        let eps_dual = opts.inner_tol * rho * u_norm;

        if opts.record_trace {
            p.op.forward_into(&x, &mut e, &mut ws);
            let res = e.iter().zip(&y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            trace.push(IterationRecord {
                iter: k,
                objective: objective(p, &x, &weights) * w_min * scale,
                primal_residual: primal * scale,
                dual_residual: dual * scale,
                eta_slack: (res - eta) * scale,
                rho,
            });
        }

        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }

        if opts.adaptive_rho && k % RHO_CHECK_EVERY == 0 {
            // Balance the residuals relative to their own tolerances.
            let pr = primal / eps_pri.max(f64::MIN_POSITIVE);
            let dr = dual / eps_dual.max(f64::MIN_POSITIVE);
            let factor = if pr > RHO_MU * dr && rho * RHO_TAU <= RHO_MAX {
                RHO_TAU
            } else if dr > RHO_MU * pr && rho / RHO_TAU >= RHO_MIN {
                1.0 / RHO_TAU
            } else {
                1.0
            };
            if factor != 1.0 {
                rho *= factor;
                u.iter_mut().for_each(|c| *c /= factor);
            }
        }
    }

    let r_hat: Vec<C64> = x.iter().map(|c| c * scale).collect();
    p.op.forward_into(&r_hat, &mut e, &mut ws);
    let residual_norm = e.iter().zip(p.y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let feasible = residual_norm <= p.eta * (1.0 + FEASIBILITY_SLACK) + 10.0 * opts.inner_tol * y_norm;

    SpectrumEstimate {
        objective: p.objective(&r_hat),
        r_hat,
        residual_norm,
        inner_iters_used: iters,
        converged: converged && feasible,
        trace,
    }
}

fn objective(p: &GroupProblem<'_>, r: &[C64], weights: &[f64]) -> f64 {
    crate::solver::weighted_group_norm(r, p.plan, weights)
}

/// In-place projection of `v` onto `{r : ‖A r − y‖ ≤ eta}`.
fn project(
    p: &GroupProblem<'_>,
    y: &[C64],
    eta: f64,
    v: &mut [C64],
    e: &mut [C64],
    back: &mut [C64],
    ws: &mut Workspace,
) {
    p.op.forward_into(v, e, ws);
    let mut norm_sq = 0.0;
    for (ei, yi) in e.iter_mut().zip(y) {
        *ei -= yi;
        norm_sq += ei.norm_sqr();
    }
    let norm = norm_sq.sqrt();
    if norm <= eta {
        return;
    }
    let shrink = 1.0 - eta / norm;
    e.iter_mut().for_each(|c| *c *= shrink);
    p.op.adjoint_into(e, back, ws);
    for (vi, bi) in v.iter_mut().zip(back.iter()) {
        *vi -= bi;
    }
}
