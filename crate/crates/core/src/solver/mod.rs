//! Spectrum recovery from sub-Nyquist measurements.
//!
//! All three recovery programs minimise a weighted sum of section norms,
//!
//! ```text
//!     min  Σ_i w_i ‖r_i‖₂   s.t.  ‖A r − y‖₂ ≤ η
//! ```
//!
//! with `A` the partial-Fourier operator. BPDN is the instance where every
//! bin is its own section and all weights are one, VLBS uses the band plan
//! with unit weights, and EVLBS re-solves VLBS with weights updated from the
//! previous estimate.

mod admm;
pub mod oracle;
mod reweight;

use serde::{Deserialize, Serialize};

use crate::band::BandPlan;
use crate::error::{Error, Result};
use crate::sampling::{PartialFourier, SamplingPattern};
use crate::C64;

pub use admm::block_shrink;
pub use oracle::{l0_oracle, L0Solution};
pub(crate) use reweight::solve_evlbs_with;
pub use reweight::{
    solve_evlbs, update_weights, update_weights_with, EvlbsOptions, EvlbsOutcome, OuterStep,
    ReweightState, SectionPower, StopRule,
};

/// Relative slack on the data constraint accepted for a converged estimate.
pub const FEASIBILITY_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_inner_iters: usize,
    /// Relative primal/dual residual tolerance.
    pub inner_tol: f64,
    /// Initial ADMM penalty, in units where `‖y‖₂ = 1` and the smallest weight is one.
    pub admm_rho: f64,
    /// Rebalance the penalty when primal and dual residuals drift apart.
    pub adaptive_rho: bool,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_inner_iters: 2000,
            inner_tol: 1e-6,
            admm_rho: 1.0,
            adaptive_rho: true,
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_inner_iters == 0 {
            return Err(Error::InvalidArgument("max_inner_iters must be at least 1".into()));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::InvalidArgument("inner_tol must be positive".into()));
        }
        if !(self.admm_rho > 0.0 && self.admm_rho.is_finite()) {
            return Err(Error::InvalidArgument("admm_rho must be positive".into()));
        }
        Ok(())
    }
}

/// One ADMM iteration, in the caller's units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `‖A r − y‖₂ − η` for the current group-sparse iterate.
    pub eta_slack: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub r_hat: Vec<C64>,
    /// `‖A r_hat − y‖₂`.
    pub residual_norm: f64,
    /// `Σ w_i ‖r_hat_i‖₂` under the weights the estimate was solved with.
    pub objective: f64,
    pub inner_iters_used: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<IterationRecord>,
}

/// ℓ1-minimising recovery under a noise ball of radius `eta`.
pub fn solve_bpdn(
    y: &[C64],
    pattern: &SamplingPattern,
    eta: f64,
    opts: &SolverOptions,
) -> Result<SpectrumEstimate> {
    let plan = BandPlan::singletons(pattern.n)?;
    let weights = vec![1.0; plan.len()];
    solve_group(y, pattern, &plan, &weights, eta, opts)
}

/// Weighted group-norm recovery with sections taken from `plan`.
pub fn solve_group(
    y: &[C64],
    pattern: &SamplingPattern,
    plan: &BandPlan,
    weights: &[f64],
    eta: f64,
    opts: &SolverOptions,
) -> Result<SpectrumEstimate> {
    let op = PartialFourier::new(pattern.clone());
    GroupProblem::new(&op, y, plan, weights, eta)?.solve(opts, None)
}

/// A validated group-recovery instance over a shared operator.
#[derive(Debug, Clone, Copy)]
pub struct GroupProblem<'a> {
    pub(crate) op: &'a PartialFourier,
    pub(crate) y: &'a [C64],
    pub(crate) plan: &'a BandPlan,
    pub(crate) weights: &'a [f64],
    pub(crate) eta: f64,
}

impl<'a> GroupProblem<'a> {
    pub fn new(
        op: &'a PartialFourier,
        y: &'a [C64],
        plan: &'a BandPlan,
        weights: &'a [f64],
        eta: f64,
    ) -> Result<Self> {
        if y.len() != op.m() {
            return Err(Error::LengthMismatch {
                expected: op.m(),
                actual: y.len(),
            });
        }
        plan.check_len(op.n())?;
        if weights.len() != plan.len() {
            return Err(Error::LengthMismatch {
                expected: plan.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("group weights must be positive and finite".into()));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise bound must be >= 0, got {eta}")));
        }
        Ok(Self {
            op,
            y,
            plan,
            weights,
            eta,
        })
    }

    /// Runs ADMM, optionally starting from `warm`.
    pub fn solve(&self, opts: &SolverOptions, warm: Option<&[C64]>) -> Result<SpectrumEstimate> {
        opts.validate()?;
        if let Some(w) = warm {
            self.plan.check_len(w.len())?;
        }
        Ok(admm::run(self, opts, warm))
    }

    pub fn objective(&self, r: &[C64]) -> f64 {
        weighted_group_norm(r, self.plan, self.weights)
    }
}

/// `Σ_i w_i ‖r_i‖₂` over the sections of `plan`.
pub fn weighted_group_norm(r: &[C64], plan: &BandPlan, weights: &[f64]) -> f64 {
    plan.sections()
        .zip(weights)
        .map(|(s, w)| w * crate::norm2(&r[s]))
        .sum()
}
