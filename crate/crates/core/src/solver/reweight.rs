//! Iteratively reweighted group recovery (EVLBS).
//!
//! Iterate 1 is the unit-weight VLBS solution. Each later iterate re-solves
//! the weighted problem with `w_i = 1/(p_i + δ)`, where `p_i` measures the
//! power of section `i` in the previous iterate, until `‖r_t − r_{t−1}‖₂ ≤ ε`.
//!
//! `p_i` is either the section's ℓ1 mass or its ℓ2 norm. The ℓ1 mass grows
//! with section width, so on plans with unequal sections it rewards wide
//! inactive sections that soak up noise; the ℓ2 norm is what the reweighting
//! uses by default.

use serde::{Deserialize, Serialize};

use crate::band::BandPlan;
use crate::error::{Error, Result};
use crate::sampling::{PartialFourier, SamplingPattern};
use crate::solver::{weighted_group_norm, GroupProblem, SolverOptions, SpectrumEstimate};
use crate::{norm2, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightState {
    pub weights: Vec<f64>,
    /// Section ℓ1 masses the weights were derived from.
    pub powers: Vec<f64>,
    /// Index of the iterate these weights will produce.
    pub outer_iter: usize,
    /// `‖r_t − r_{t−1}‖₂` for `t = 2, 3, …`.
    pub residual_history: Vec<f64>,
}

impl ReweightState {
    /// Unit weights for the first iterate.
    pub fn initial(k: usize) -> Self {
        Self {
            weights: vec![1.0; k],
            powers: vec![0.0; k],
            outer_iter: 1,
            residual_history: Vec::new(),
        }
    }
}

/// How a section's power `p_i` is measured from the previous iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionPower {
    /// Sum of magnitudes, `‖r_i‖₁`.
    L1,
    /// `‖r_i‖₂`, the quantity the objective penalises.
    #[default]
    L2,
}

impl SectionPower {
    pub fn measure(&self, section: &[C64]) -> f64 {
        match self {
            SectionPower::L1 => section.iter().map(|c| c.norm()).sum(),
            SectionPower::L2 => norm2(section),
        }
    }
}

/// `w_i = 1/(p_i + δ)` with `p_i = ‖r_i‖₁`.
pub fn update_weights(
    state: &ReweightState,
    estimate: &SpectrumEstimate,
    plan: &BandPlan,
    delta: f64,
) -> Result<ReweightState> {
    update_weights_with(state, estimate, plan, delta, SectionPower::L1)
}

/// `w_i = 1/(p_i + δ)` with `p_i` measured by `power`.
pub fn update_weights_with(
    state: &ReweightState,
    estimate: &SpectrumEstimate,
    plan: &BandPlan,
    delta: f64,
    power: SectionPower,
) -> Result<ReweightState> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    plan.check_len(estimate.r_hat.len())?;
    let powers: Vec<f64> = plan
        .sections()
        .map(|s| power.measure(&estimate.r_hat[s]))
        .collect();
    Ok(ReweightState {
        weights: powers.iter().map(|p| 1.0 / (p + delta)).collect(),
        powers,
        outer_iter: state.outer_iter + 1,
        residual_history: state.residual_history.clone(),
    })
}

/// Outer stopping threshold on `‖r_t − r_{t−1}‖₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StopRule {
    Absolute(f64),
    /// Fraction of `‖r_1‖₂`, the unit-weight solution's norm.
    RelativeToFirst(f64),
}

impl StopRule {
    fn epsilon(&self, first: &[C64]) -> f64 {
        match *self {
            StopRule::Absolute(e) => e,
            StopRule::RelativeToFirst(f) => f * norm2(first),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            StopRule::Absolute(v) | StopRule::RelativeToFirst(v) => v,
        };
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvlbsOptions {
    pub delta: f64,
    pub epsilon: StopRule,
    pub max_outer: usize,
    pub power: SectionPower,
    /// Start each weighted solve from the previous iterate.
    pub warm_start: bool,
}

impl Default for EvlbsOptions {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            epsilon: StopRule::RelativeToFirst(0.05),
            max_outer: 8,
            power: SectionPower::L2,
            warm_start: true,
        }
    }
}

/// Diagnostics for one outer iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterStep {
    pub t: usize,
    pub weights: Vec<f64>,
    /// Weighted objective of `r_t` under the weights that produced it.
    pub objective: f64,
    /// The same weights' objective at `r_{t−1}` (absent for `t = 1`).
    pub objective_at_previous: Option<f64>,
    pub inner_iters: usize,
    pub inner_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvlbsOutcome {
    pub estimate: SpectrumEstimate,
    pub state: ReweightState,
    /// Stopping rule met before `max_outer`.
    pub converged: bool,
    pub epsilon: f64,
    pub steps: Vec<OuterStep>,
    /// Traces of every inner solve when requested, indexed by `t − 1`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<Vec<crate::solver::IterationRecord>>,
}

impl EvlbsOutcome {
    pub fn inner_converged(&self) -> bool {
        self.steps.iter().all(|s| s.inner_converged)
    }
}

pub fn solve_evlbs(
    y: &[C64],
    pattern: &SamplingPattern,
    plan: &BandPlan,
    eta: f64,
    evlbs: &EvlbsOptions,
    opts: &SolverOptions,
) -> Result<EvlbsOutcome> {
    let op = PartialFourier::new(pattern.clone());
    solve_evlbs_with(&op, y, plan, eta, evlbs, opts)
}

pub(crate) fn solve_evlbs_with(
    op: &PartialFourier,
    y: &[C64],
    plan: &BandPlan,
    eta: f64,
    evlbs: &EvlbsOptions,
    opts: &SolverOptions,
) -> Result<EvlbsOutcome> {
    if evlbs.max_outer == 0 {
        return Err(Error::InvalidArgument("max_outer must be at least 1".into()));
    }
    evlbs.epsilon.validate()?;
    if !(evlbs.delta > 0.0 && evlbs.delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {}", evlbs.delta)));
    }

    let mut state = ReweightState::initial(plan.len());
    let trim_trace = |est: &mut SpectrumEstimate, traces: &mut Vec<_>| {
        if opts.record_trace {
            traces.push(std::mem::take(&mut est.trace));
        }
    };
    let mut traces = Vec::new();

    let mut current = GroupProblem::new(op, y, plan, &state.weights, eta)?.solve(opts, None)?;
    trim_trace(&mut current, &mut traces);
    let epsilon = evlbs.epsilon.epsilon(&current.r_hat);
    let mut steps = vec![OuterStep {
        t: 1,
        weights: state.weights.clone(),
        objective: current.objective,
        objective_at_previous: None,
        inner_iters: current.inner_iters_used,
        inner_converged: current.converged,
    }];
    let mut converged = false;

    while state.outer_iter < evlbs.max_outer {
        state = update_weights_with(&state, &current, plan, evlbs.delta, evlbs.power)?;
        let problem = GroupProblem::new(op, y, plan, &state.weights, eta)?;
        let warm = evlbs.warm_start.then_some(current.r_hat.as_slice());
        let mut next = problem.solve(opts, warm)?;
        trim_trace(&mut next, &mut traces);

        let diff = next
            .r_hat
            .iter()
            .zip(&current.r_hat)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        state.residual_history.push(diff);
        steps.push(OuterStep {
            t: state.outer_iter,
            weights: state.weights.clone(),
            objective: next.objective,
            objective_at_previous: Some(weighted_group_norm(&current.r_hat, plan, &state.weights)),
            inner_iters: next.inner_iters_used,
            inner_converged: next.converged,
        });
        current = next;
        if diff <= epsilon {
            converged = true;
            break;
        }
    }

    Ok(EvlbsOutcome {
        estimate: current,
        state,
        converged,
        epsilon,
        steps,
        traces,
    })
}
