use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::band::BandPlan;
use crate::detection::{detect_holes, enhancement_ratio, subband_energies, OccupancyReport, SubbandEnergies};
use crate::error::Result;
use crate::harness::config::{ExperimentConfig, Method};
use crate::sampling::{acquire, draw_pattern, PartialFourier, SamplingPattern};
use crate::signal::{add_awgn, generate_multiband, GroundTruth};
use crate::solver::{solve_evlbs_with, GroupProblem, IterationRecord, SpectrumEstimate};
use crate::{norm2, C64};

/// Independent seeds for one trial, derived from the master seed by
/// selecting ChaCha stream `trial_index`. Order-independent by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub signal: u64,
    pub noise: u64,
    pub pattern: u64,
}

impl TrialSeeds {
    pub fn derive(master: u64, trial_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        rng.set_stream(trial_index);
        Self {
            signal: rng.next_u64(),
            noise: rng.next_u64(),
            pattern: rng.next_u64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    /// Absolute noise bound used, `eta_fraction · ‖y‖₂`.
    pub eta: f64,
    pub residual_norm: f64,
    pub objective: f64,
    pub inner_iters_used: usize,
    pub converged: bool,
}

impl EstimateSummary {
    fn new(est: &SpectrumEstimate, eta: f64) -> Self {
        Self {
            eta,
            residual_norm: est.residual_norm,
            objective: est.objective,
            inner_iters_used: est.inner_iters_used,
            converged: est.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightSummary {
    pub outer_iters: usize,
    pub converged: bool,
    pub epsilon: f64,
    pub residual_history: Vec<f64>,
    pub final_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub summary: EstimateSummary,
    pub energies: SubbandEnergies,
    pub occupancy: OccupancyReport,
    pub reweight: Option<ReweightSummary>,
    pub wall_clock_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_hat: Option<Vec<C64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEdper {
    pub r1: Option<Vec<Option<f64>>>,
    pub r2: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub ratio: f64,
    pub seeds: TrialSeeds,
    pub pattern_m: usize,
    pub true_energies: Vec<f64>,
    pub active_mask: Vec<bool>,
    pub methods: Vec<MethodResult>,
    /// Present when `bpdn` and at least one of the block methods ran.
    pub edper: Option<TrialEdper>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectra: Option<TrialSpectra>,
}

impl TrialResult {
    pub fn method(&self, m: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }

    /// Zeroes the wall-clock fields, the only nondeterministic content.
    pub fn without_timing(mut self) -> Self {
        for m in &mut self.methods {
            m.wall_clock_s = 0.0;
        }
        self
    }
}

/// Full spectra of one trial, kept for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpectra {
    pub truth: Vec<C64>,
    /// Unitary DFT of the noisy Nyquist-rate signal.
    pub noisy: Vec<C64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrialOptions {
    pub keep_spectra: bool,
    pub record_trace: bool,
}

/// Per-iteration trace of one method in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub method: Method,
    pub outer: usize,
    #[serde(flatten)]
    pub record: IterationRecord,
}

/// Runs every configured method on trial `trial_index` at sub-sampling `ratio`.
pub fn run_trial(config: &ExperimentConfig, ratio: f64, trial_index: u64) -> Result<TrialResult> {
    run_trial_with(config, ratio, trial_index, TrialOptions::default()).map(|(r, _)| r)
}

pub fn run_trial_with(
    config: &ExperimentConfig,
    ratio: f64,
    trial_index: u64,
    opts: TrialOptions,
) -> Result<(TrialResult, Vec<TraceRow>)> {
    let plan = config.plan()?;
    let seeds = TrialSeeds::derive(config.seed, trial_index);
    let clean = generate_multiband(&config.signal, seeds.signal)?;
    let truth = add_awgn(&clean, config.signal.snr_db, seeds.noise)?;
    let pattern = draw_pattern(config.signal.n_bins, ratio, seeds.pattern)?;
    let y = acquire(&truth, &pattern)?;
    let y_norm = norm2(&y);

    let true_energies = subband_energies(&truth.spectrum, &plan)?;
    let active_mask: Vec<bool> = true_energies.energies.iter().map(|&e| e > 0.0).collect();

    let mut solver = config.solver;
    solver.record_trace = opts.record_trace;
    let op = PartialFourier::new(pattern.clone());
    let bins = BandPlan::singletons(config.signal.n_bins)?;

    let mut methods = Vec::with_capacity(config.methods.len());
    let mut trace = Vec::new();
    for &method in &config.methods {
        let eta = config.eta_fraction(method) * y_norm;
        let start = Instant::now();
        let (estimate, reweight) = match method {
            Method::Bpdn => {
                let w = vec![1.0; bins.len()];
                let est = GroupProblem::new(&op, &y, &bins, &w, eta)?.solve(&solver, None)?;
                push_trace(&mut trace, method, 1, &est.trace);
                (est, None)
            }
            Method::Vlbs => {
                let w = vec![1.0; plan.len()];
                let est = GroupProblem::new(&op, &y, &plan, &w, eta)?.solve(&solver, None)?;
                push_trace(&mut trace, method, 1, &est.trace);
                (est, None)
            }
            Method::Evlbs => {
                let out = solve_evlbs_with(&op, &y, &plan, eta, &config.evlbs_options(), &solver)?;
                for (t, records) in out.traces.iter().enumerate() {
                    push_trace(&mut trace, method, t + 1, records);
                }
                let summary = ReweightSummary {
                    outer_iters: out.steps.len(),
                    converged: out.converged,
                    epsilon: out.epsilon,
                    residual_history: out.state.residual_history.clone(),
                    final_weights: out.state.weights.clone(),
                };
                let mut est = out.estimate;
                est.converged = out.steps.iter().all(|s| s.inner_converged);
                (est, Some(summary))
            }
        };
        let wall_clock_s = start.elapsed().as_secs_f64();
        let energies = subband_energies(&estimate.r_hat, &plan)?;
        let occupancy = detect_holes(&energies, config.threshold)?;
        methods.push(MethodResult {
            method,
            summary: EstimateSummary::new(&estimate, eta),
            energies,
            occupancy,
            reweight,
            wall_clock_s,
            r_hat: opts.keep_spectra.then(|| estimate.r_hat.clone()),
        });
    }

    let edper = edper_against_bpdn(&methods, &active_mask);
    let spectra = opts.keep_spectra.then(|| spectra_of(&truth));

    Ok((
        TrialResult {
            trial_index,
            ratio,
            seeds,
            pattern_m: pattern.m(),
            true_energies: true_energies.energies,
            active_mask,
            methods,
            edper,
            spectra,
        },
        trace,
    ))
}

/// The sampling pattern a trial uses, for reproducibility records.
pub fn trial_pattern(config: &ExperimentConfig, ratio: f64, trial_index: u64) -> Result<SamplingPattern> {
    let seeds = TrialSeeds::derive(config.seed, trial_index);
    draw_pattern(config.signal.n_bins, ratio, seeds.pattern)
}

fn edper_against_bpdn(methods: &[MethodResult], active: &[bool]) -> Option<TrialEdper> {
    let find = |m: Method| methods.iter().find(|r| r.method == m).map(|r| r.energies.squared());
    let base = find(Method::Bpdn)?;
    let r1 = find(Method::Vlbs).map(|v| enhancement_ratio(&base, &v, active));
    let r2 = find(Method::Evlbs).map(|e| enhancement_ratio(&base, &e, active));
    if r1.is_none() && r2.is_none() {
        return None;
    }
    Some(TrialEdper { r1, r2 })
}

fn spectra_of(truth: &GroundTruth) -> TrialSpectra {
    let dft = crate::dft::UnitaryDft::new(truth.len());
    TrialSpectra {
        truth: truth.spectrum.clone(),
        noisy: dft.forward(&truth.noisy_signal),
    }
}

fn push_trace(out: &mut Vec<TraceRow>, method: Method, outer: usize, records: &[IterationRecord]) {
    out.extend(records.iter().map(|&record| TraceRow {
        method,
        outer,
        record,
    }));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_per_trial_and_repeat_per_master() {
        let a = TrialSeeds::derive(7, 0);
        assert_eq!(a, TrialSeeds::derive(7, 0));
        assert_ne!(a, TrialSeeds::derive(7, 1));
        assert_ne!(a, TrialSeeds::derive(8, 0));
        assert_ne!(a.signal, a.noise);
    }
}
