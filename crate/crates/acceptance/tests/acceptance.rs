//! Acceptance criteria, each at its pinned tolerance. Prints one PASS/FAIL
//! line per criterion and exits nonzero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use cwss::harness::{emit_report, run_monte_carlo, run_trials, ExperimentConfig, Method, Preset, RatioReport, TrialResult};
use cwss::sampling::{adjoint, draw_pattern, forward};
use cwss::solver::{l0_oracle, solve_bpdn, L0Solution, SolverOptions};
use cwss::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_vec(rng: &mut impl Rng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn operator_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_adj, mut worst_tight) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = draw_pattern(32, 0.4, rng.random()).unwrap();
        let r = random_vec(&mut rng, 32);
        let y = random_vec(&mut rng, p.m());
        let lhs = inner(&forward(&r, &p).unwrap(), &y);
        let rhs = inner(&r, &adjoint(&y, &p).unwrap());
        worst_adj = worst_adj.max((lhs - rhs).norm());
        let back = forward(&adjoint(&y, &p).unwrap(), &p).unwrap();
        worst_tight = worst_tight.max(common::dist(&back, &y));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_adj <= 1e-12 && worst_tight <= 1e-12 && secs < 1.0,
        format!("max adjoint gap {worst_adj:.1e}, max |A A^H y - y| {worst_tight:.1e}, {secs:.3} s"),
    )
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opts = SolverOptions::default();
    let (mut worst_r, mut worst_obj) = (0.0f64, 0.0f64);
    let (mut missing, mut off_l0) = (0, 0);
    // At N = 8 a 3-sparse vector is beyond what l1 can recover from 4 samples,
    // so the instances use the largest size the criterion allows.
    let n = 16;
    for _ in 0..50 {
        let p = draw_pattern(n, 0.5, rng.random()).unwrap();
        let s = rng.random_range(1..=3usize);
        let mut r = vec![C64::default(); n];
        for idx in rand::seq::index::sample(&mut rng, n, s) {
            r[idx] = C64::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..std::f64::consts::TAU));
        }
        let y = forward(&r, &p).unwrap();
        let a = p.dense_matrix().unwrap();
        let L0Solution::Found { r: r0, .. } = l0_oracle(&y, &a, 3).unwrap() else {
            missing += 1;
            continue;
        };
        let est = solve_bpdn(&y, &p, 0.0, &opts).unwrap();
        let d = common::dist(&est.r_hat, &r0);
        off_l0 += (d > 1e-4) as usize;
        worst_r = worst_r.max(d);
        let groups = common::singletons(n);
        let w = vec![1.0; n];
        let cp = common::dense_group_solve(&a, &y, &groups, &w, 0.0, 100_000);
        let oracle = common::group_objective(&cp, &groups, &w);
        worst_obj = worst_obj.max((est.objective - oracle).abs() / oracle);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        missing == 0 && worst_r <= 1e-4 && worst_obj <= 1e-5 && secs < 30.0,
        format!(
            "max |r - r_l0| {worst_r:.1e} ({off_l0}/50 instances off the l0 solution), \
             max relative objective gap to the dense convex oracle {worst_obj:.1e}, \
             {missing} instances without an l0 solution, {secs:.1} s"
        ),
    )
}

fn fmt_row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn inactive(report: &RatioReport) -> Vec<usize> {
    report.sections.iter().filter(|s| !s.active).map(|s| s.index - 1).collect()
}

fn table_ordering(report: &RatioReport) -> Outcome {
    let bpdn = &report.method(Method::Bpdn).unwrap().mean_energy;
    let vlbs = &report.method(Method::Vlbs).unwrap().mean_energy;
    let evlbs = &report.method(Method::Evlbs).unwrap().mean_energy;
    let mut failures = Vec::new();
    for k in inactive(report) {
        if !(evlbs[k] < vlbs[k] && vlbs[k] < bpdn[k]) {
            failures.push(format!("s{} ordering", k + 1));
        }
        if evlbs[k] > 0.01 {
            failures.push(format!("s{} evlbs {:.4} > 0.01", k + 1, evlbs[k]));
        }
        if bpdn[k] < 0.05 {
            failures.push(format!("s{} bpdn {:.4} < 0.05", k + 1, bpdn[k]));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "bpdn [{}] vlbs [{}] evlbs [{}]; violations: {}",
            fmt_row(bpdn),
            fmt_row(vlbs),
            fmt_row(evlbs),
            if failures.is_empty() { "none".into() } else { failures.join(", ") }
        ),
    )
}

fn edper_signs(report: &RatioReport) -> Outcome {
    let r1 = report.mean_r1.as_ref().unwrap();
    let r2 = report.mean_r2.as_ref().unwrap();
    let mut failures = Vec::new();
    for k in inactive(report) {
        match (r1[k], r2[k]) {
            (Some(a), Some(b)) if b >= a => {}
            _ => failures.push(format!("s{} R2 < R1", k + 1)),
        }
    }
    for k in [0usize, 2, 6, 8] {
        // 100% at the table's two-decimal percentage precision.
        if !r2[k].is_some_and(|v| (v - 1.0).abs() < 5e-5) {
            failures.push(format!("s{} R2 = {:?}", k + 1, r2[k]));
        }
    }
    let pct = |v: &[Option<f64>]| {
        v.iter()
            .map(|x| x.map_or("n/a".to_string(), |x| format!("{:.2}%", 100.0 * x)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        failures.is_empty(),
        format!(
            "R1 [{}] R2 [{}]; violations: {}",
            pct(r1),
            pct(r2),
            if failures.is_empty() { "none".into() } else { failures.join(", ") }
        ),
    )
}

/// `residual_history[i]` is `‖r_t − r_{t−1}‖` for `t = i + 2`.
fn convergence_profile(trials: &[TrialResult]) -> Outcome {
    let mut monotone = 0;
    let mut drop = 0;
    let mut complete = 0;
    let mut sums = [0.0f64; 7];
    for t in trials {
        let h = &t.method(Method::Evlbs).unwrap().reweight.as_ref().unwrap().residual_history;
        if h.len() < 7 {
            continue;
        }
        complete += 1;
        for (s, v) in sums.iter_mut().zip(h) {
            *s += v;
        }
        // Strictly decreasing over t = 3..8.
        monotone += h[1..7].windows(2).all(|w| w[1] < w[0]) as usize;
        drop += (h[0] >= 20.0 * h[6]) as usize;
    }
    let n = trials.len() as f64;
    let both: usize = trials
        .iter()
        .filter(|t| {
            let h = &t.method(Method::Evlbs).unwrap().reweight.as_ref().unwrap().residual_history;
            h.len() >= 7 && h[1..7].windows(2).all(|w| w[1] < w[0]) && h[0] >= 20.0 * h[6]
        })
        .count();
    let mean: Vec<f64> = sums.iter().map(|s| s / complete.max(1) as f64).collect();
    outcome(
        both as f64 >= 0.9 * n,
        format!(
            "monotone after t=3 in {monotone}/{}, >=20x drop t=2..8 in {drop}/{}, both in {both}/{}; \
             mean history t=2..8 [{}]",
            trials.len(),
            trials.len(),
            trials.len(),
            mean.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn detection(table1: &RatioReport, table4: &RatioReport) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, r) in [("table1", table1), ("table4", table4)] {
        let e = r.method(Method::Evlbs).unwrap();
        let b = r.method(Method::Bpdn).unwrap();
        let (fa_b, fa_e) = (b.false_alarm_rate.unwrap(), e.false_alarm_rate.unwrap());
        pass &= e.exact_mask_rate >= 0.95 && fa_b > fa_e;
        parts.push(format!(
            "{name}: evlbs exact mask {:.3}, false alarm bpdn {fa_b:.3} vs evlbs {fa_e:.3}",
            e.exact_mask_rate
        ));
    }
    outcome(pass, parts.join("; "))
}

/// Two executions of the `run` pipeline into separate directories.
fn determinism() -> Outcome {
    let mut config = Preset::Table1.config();
    config.trials = 20;
    config.seed = 7;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut written = Vec::new();
    for d in &dirs {
        let report = run_monte_carlo(&config).unwrap();
        written = emit_report(&report, config.format, d.path()).unwrap();
    }
    for path in &written {
        let name = path.file_name().unwrap();
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        if a != b {
            return outcome(false, format!("{name:?} differs"));
        }
    }
    outcome(written.len() == 3, format!("{} files byte-identical across two runs", written.len()))
}

fn scenario(preset: Preset) -> (ExperimentConfig, Vec<TrialResult>, RatioReport) {
    let config = preset.config();
    let ratio = config.ratios[0];
    let trials = run_trials(&config, ratio);
    let report = cwss::harness::aggregate(&config, ratio, &trials).unwrap();
    assert_eq!(report.error_count, 0, "{:?}", report.errors);
    let trials = trials.into_iter().map(Result::unwrap).collect();
    (config, trials, report)
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters probe the binary; answer quietly.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "operator correctness", operator_correctness()));
    results.push((2, "small-instance oracle equivalence", oracle_equivalence()));

    let (config, _, table1) = scenario(Preset::Table1);
    results.push((3, "table-1 ordering", table_ordering(&table1)));
    results.push((4, "EDPER sign pattern", edper_signs(&table1)));

    // The profile needs every t up to max_outer, so the outer stopping rule is disabled.
    let mut profile_cfg = config.clone();
    profile_cfg.epsilon = f64::MIN_POSITIVE;
    profile_cfg.methods = vec![Method::Evlbs];
    let profile: Vec<TrialResult> = run_trials(&profile_cfg, profile_cfg.ratios[0])
        .into_iter()
        .map(Result::unwrap)
        .collect();
    results.push((5, "convergence profile", convergence_profile(&profile)));

    let (_, _, table4) = scenario(Preset::Table4);
    results.push((6, "detection", detection(&table1, &table4)));
    results.push((7, "determinism", determinism()));

    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n} ({name}): {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += (!o.pass) as usize;
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
