//! Monte Carlo aggregation and report emission.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Method, OutputFormat};
use crate::harness::trial::{run_trial, run_trial_with, TraceRow, TrialOptions, TrialResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CSV_HEADER: [&str; 7] = [
    "method",
    "section",
    "hz_range",
    "mean_energy",
    "detection_rate",
    "r1",
    "r2",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionInfo {
    /// 1-based, as in the band plan tables.
    pub index: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub active: bool,
}

impl SectionInfo {
    pub fn hz_range(&self) -> String {
        format!("{}-{}", self.low_hz, self.high_hz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: Method,
    /// Mean of `‖r_k‖₂` over trials, normalised spectra.
    pub mean_energy: Vec<f64>,
    /// Mean of `‖r_k‖₂²`.
    pub mean_energy_sq: Vec<f64>,
    /// Fraction of trials in which section `k` was flagged occupied.
    pub occupancy_rate: Vec<f64>,
    /// Occupancy rate over truly active sections, pooled.
    pub detection_rate: Option<f64>,
    /// Occupancy rate over truly inactive sections, pooled.
    pub false_alarm_rate: Option<f64>,
    /// Fraction of trials whose occupancy mask equals the true mask.
    pub exact_mask_rate: f64,
    /// Fraction of trials where every inner solve met its stopping rule.
    pub converged_rate: f64,
    pub mean_inner_iters: f64,
    pub mean_residual_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceStats>,
}

/// Outer-loop statistics for the reweighted method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStats {
    /// Mean `‖r_t − r_{t−1}‖₂` for `t = 2, 3, …`, over trials that reached `t`.
    pub mean_residual: Vec<f64>,
    pub trials_reaching: Vec<usize>,
    pub mean_outer_iters: f64,
    /// Fraction of trials that met the outer stopping rule.
    pub stopped_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialError {
    pub trial_index: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub ratio: f64,
    pub trials: usize,
    pub error_count: usize,
    pub errors: Vec<TrialError>,
    pub sections: Vec<SectionInfo>,
    /// Mean section norms of the noiseless reference spectrum.
    pub true_mean_energy: Vec<f64>,
    pub methods: Vec<MethodAggregate>,
    /// Mean EDPER of VLBS and EVLBS against BPDN, over trials where defined.
    pub mean_r1: Option<Vec<Option<f64>>>,
    pub mean_r2: Option<Vec<Option<f64>>>,
    /// Magnitude spectra of trial 0; written as plot data, not echoed in JSON.
    #[serde(skip)]
    pub plot: Option<PlotSeries>,
}

impl RatioReport {
    pub fn method(&self, m: Method) -> Option<&MethodAggregate> {
        self.methods.iter().find(|a| a.method == m)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSeries {
    pub freq_hz: Vec<f64>,
    pub truth: Vec<f64>,
    pub noisy: Vec<f64>,
    pub methods: Vec<(Method, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub tool_version: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub error_count: usize,
    pub scenarios: Vec<RatioReport>,
}

/// Runs all trials at one ratio, in parallel, returned in trial order.
pub fn run_trials(config: &ExperimentConfig, ratio: f64) -> Vec<Result<TrialResult>> {
    (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(config, ratio, t))
        .collect()
}

pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<AggregateReport> {
    config.validate()?;
    let mut scenarios = Vec::with_capacity(config.ratios.len());
    for &ratio in &config.ratios {
        let trials = run_trials(config, ratio);
        let mut report = aggregate(config, ratio, &trials)?;
        report.plot = plot_series(config, ratio).ok();
        scenarios.push(report);
    }
    Ok(AggregateReport {
        tool_version: TOOL_VERSION.to_string(),
        master_seed: config.seed,
        config: config.clone(),
        error_count: scenarios.iter().map(|s| s.error_count).sum(),
        scenarios,
    })
}

/// Deterministic reduction over `trials` in index order.
pub fn aggregate(config: &ExperimentConfig, ratio: f64, trials: &[Result<TrialResult>]) -> Result<RatioReport> {
    let plan = config.plan()?;
    let k = plan.len();
    let mut errors = Vec::new();
    let mut ok = Vec::with_capacity(trials.len());
    for (i, t) in trials.iter().enumerate() {
        match t {
            Ok(r) => ok.push(r),
            Err(e) => errors.push(TrialError {
                trial_index: i as u64,
                message: e.to_string(),
            }),
        }
    }

    let mut edges = Vec::with_capacity(k + 1);
    edges.push(0.0);
    edges.extend_from_slice(&config.boundaries_hz);
    edges.push(config.signal.nyquist_hz);
    let active = config.signal.band_bins()?;
    let sections: Vec<SectionInfo> = plan
        .sections()
        .enumerate()
        .map(|(i, s)| SectionInfo {
            index: i + 1,
            low_hz: edges[i],
            high_hz: edges[i + 1],
            active: active.iter().any(|b| b.start < s.end && s.start < b.end),
        })
        .collect();

    let true_mean_energy = mean_vec(ok.iter().map(|t| t.true_energies.as_slice()), k);
    let methods = config
        .methods
        .iter()
        .map(|&m| aggregate_method(m, &ok, k))
        .collect();
    let edper_mean = |pick: fn(&crate::harness::trial::TrialEdper) -> Option<&Vec<Option<f64>>>| {
        let rows: Vec<&Vec<Option<f64>>> = ok
            .iter()
            .filter_map(|t| t.edper.as_ref().and_then(pick))
            .collect();
        if rows.is_empty() {
            return None;
        }
        Some(
            (0..k)
                .map(|j| mean(rows.iter().filter_map(|r| r[j])))
                .collect(),
        )
    };
    let mean_r1 = edper_mean(|e| e.r1.as_ref());
    let mean_r2 = edper_mean(|e| e.r2.as_ref());

    Ok(RatioReport {
        ratio,
        trials: trials.len(),
        error_count: errors.len(),
        errors,
        sections,
        true_mean_energy,
        methods,
        mean_r1,
        mean_r2,
        plot: None,
    })
}

fn aggregate_method(method: Method, trials: &[&TrialResult], k: usize) -> MethodAggregate {
    let rows: Vec<(&TrialResult, &crate::harness::trial::MethodResult)> = trials
        .iter()
        .filter_map(|t| t.method(method).map(|m| (*t, m)))
        .collect();
    let n = rows.len() as f64;
    let rate = |count: usize| if rows.is_empty() { 0.0 } else { count as f64 / n };

    let mean_energy = mean_vec(rows.iter().map(|(_, m)| m.energies.energies.as_slice()), k);
    let squared: Vec<Vec<f64>> = rows.iter().map(|(_, m)| m.energies.squared()).collect();
    let mean_energy_sq = mean_vec(squared.iter().map(Vec::as_slice), k);
    let occupancy_rate = (0..k)
        .map(|j| rate(rows.iter().filter(|(_, m)| m.occupancy.occupied[j]).count()))
        .collect();

    let pooled = |want: bool| {
        let mut hits = 0usize;
        let mut total = 0usize;
        for (t, m) in &rows {
            for (occ, act) in m.occupancy.occupied.iter().zip(&t.active_mask) {
                if *act == want {
                    total += 1;
                    hits += *occ as usize;
                }
            }
        }
        (total > 0).then(|| hits as f64 / total as f64)
    };

    let convergence = (method == Method::Evlbs).then(|| {
        let histories: Vec<&Vec<f64>> = rows
            .iter()
            .filter_map(|(_, m)| m.reweight.as_ref().map(|r| &r.residual_history))
            .collect();
        let longest = histories.iter().map(|h| h.len()).max().unwrap_or(0);
        let trials_reaching: Vec<usize> = (0..longest)
            .map(|i| histories.iter().filter(|h| h.len() > i).count())
            .collect();
        let mean_residual = (0..longest)
            .map(|i| mean(histories.iter().filter_map(|h| h.get(i).copied())).unwrap_or(0.0))
            .collect();
        let summaries: Vec<_> = rows.iter().filter_map(|(_, m)| m.reweight.as_ref()).collect();
        ConvergenceStats {
            mean_residual,
            trials_reaching,
            mean_outer_iters: mean(summaries.iter().map(|s| s.outer_iters as f64)).unwrap_or(0.0),
            stopped_rate: rate(summaries.iter().filter(|s| s.converged).count()),
        }
    });

    MethodAggregate {
        method,
        mean_energy,
        mean_energy_sq,
        occupancy_rate,
        detection_rate: pooled(true),
        false_alarm_rate: pooled(false),
        exact_mask_rate: rate(rows.iter().filter(|(t, m)| m.occupancy.occupied == t.active_mask).count()),
        converged_rate: rate(rows.iter().filter(|(_, m)| m.summary.converged).count()),
        mean_inner_iters: mean(rows.iter().map(|(_, m)| m.summary.inner_iters_used as f64)).unwrap_or(0.0),
        mean_residual_norm: mean(rows.iter().map(|(_, m)| m.summary.residual_norm)).unwrap_or(0.0),
        convergence,
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn mean_vec<'a>(rows: impl Iterator<Item = &'a [f64]>, k: usize) -> Vec<f64> {
    let mut sum = vec![0.0; k];
    let mut n = 0usize;
    for row in rows {
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
        n += 1;
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    sum
}

/// Magnitude spectra of trial 0 at `ratio`.
pub fn plot_series(config: &ExperimentConfig, ratio: f64) -> Result<PlotSeries> {
    let opts = TrialOptions {
        keep_spectra: true,
        record_trace: false,
    };
    let (trial, _) = run_trial_with(config, ratio, 0, opts)?;
    let spectra = trial
        .spectra
        .ok_or_else(|| Error::InvalidArgument("trial kept no spectra".into()))?;
    let bin_hz = config.signal.bin_hz();
    let mags = |v: &[crate::C64]| v.iter().map(|c| c.norm()).collect::<Vec<_>>();
    Ok(PlotSeries {
        freq_hz: (0..spectra.truth.len()).map(|i| i as f64 * bin_hz).collect(),
        truth: mags(&spectra.truth),
        noisy: mags(&spectra.noisy),
        methods: trial
            .methods
            .iter()
            .filter_map(|m| m.r_hat.as_ref().map(|r| (m.method, mags(r))))
            .collect(),
    })
}

fn ratio_tag(ratio: f64) -> String {
    format!("r{ratio:.2}")
}

/// Writes the summary CSV(s), `report.json` and plot series into `out_dir`.
pub fn emit_report(report: &AggregateReport, format: OutputFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    if format.csv() {
        for s in &report.scenarios {
            let path = out_dir.join(format!("summary_{}.csv", ratio_tag(s.ratio)));
            fs::write(&path, summary_csv(s)?).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            if let Some(plot) = &s.plot {
                let path = out_dir.join(format!("spectrum_{}.csv", ratio_tag(s.ratio)));
                fs::write(&path, plot_csv(plot)?).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
    }
    if format.json() {
        let path = out_dir.join("report.json");
        let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::Serialize(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per section per method. `detection_rate` is the fraction of trials
/// flagging the section occupied, so on inactive sections it is the false-alarm rate.
pub fn summary_csv(s: &RatioReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    w.write_record(CSV_HEADER).map_err(ser)?;
    let r = |rows: &Option<Vec<Option<f64>>>, j: usize| opt(rows.as_ref().and_then(|v| v[j]));
    for m in &s.methods {
        for (j, sec) in s.sections.iter().enumerate() {
            w.write_record([
                m.method.name().to_string(),
                sec.index.to_string(),
                sec.hz_range(),
                m.mean_energy[j].to_string(),
                m.occupancy_rate[j].to_string(),
                r(&s.mean_r1, j),
                r(&s.mean_r2, j),
            ])
            .map_err(ser)?;
        }
    }
    finish(w)
}

pub fn plot_csv(p: &PlotSeries) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    let mut header = vec!["freq_hz", "true", "noisy"];
    header.extend(p.methods.iter().map(|(m, _)| m.name()));
    w.write_record(&header).map_err(ser)?;
    for i in 0..p.freq_hz.len() {
        let mut row = vec![p.freq_hz[i].to_string(), p.truth[i].to_string(), p.noisy[i].to_string()];
        row.extend(p.methods.iter().map(|(_, v)| v[i].to_string()));
        w.write_record(&row).map_err(ser)?;
    }
    finish(w)
}

pub fn trace_csv(rows: &[TraceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    w.write_record([
        "method",
        "outer",
        "iter",
        "objective",
        "primal_residual",
        "dual_residual",
        "eta_slack",
        "rho",
    ])
    .map_err(ser)?;
    for row in rows {
        let r = &row.record;
        w.write_record([
            row.method.name().to_string(),
            row.outer.to_string(),
            r.iter.to_string(),
            r.objective.to_string(),
            r.primal_residual.to_string(),
            r.dual_residual.to_string(),
            r.eta_slack.to_string(),
            r.rho.to_string(),
        ])
        .map_err(ser)?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}
