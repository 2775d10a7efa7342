use cwss::band::BandPlan;
use cwss::detection::subband_energies;
use cwss::dft::UnitaryDft;
use cwss::harness::Preset;
use cwss::signal::{add_awgn, generate_multiband, true_subband_energy, ActiveBand, SignalSpec};
use cwss::C64;
use proptest::prelude::*;

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Random disjoint bands on a grid of `n` bins spanning `n` Hz.
fn spec_strategy() -> impl Strategy<Value = SignalSpec> {
    (8usize..=256, prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..2.0, 0.0f64..2.0), 0..4), any::<bool>())
        .prop_map(|(n, raw, random_phase)| {
            // Split [0, n) into equal slots and put at most one band in each.
            let slots = raw.len().max(1);
            let width = n as f64 / slots as f64;
            let active_bands = raw
                .iter()
                .enumerate()
                .filter_map(|(i, &(a, b, l1, l2))| {
                    let lo = (i as f64 * width + a * width * 0.5).floor();
                    let hi = (lo + 1.0 + b * width * 0.4).floor().min(((i + 1) as f64 * width).floor());
                    (hi > lo).then(|| ActiveBand::new(lo, hi, l1.min(l2), l1.max(l2)))
                })
                .collect();
            SignalSpec {
                n_bins: n,
                nyquist_hz: n as f64,
                active_bands,
                snr_db: f64::INFINITY,
                random_phase,
            }
        })
}

proptest! {
    #[test]
    fn round_trip_parseval_and_support(spec in spec_strategy(), seed: u64) {
        let truth = generate_multiband(&spec, seed).unwrap();
        let back = UnitaryDft::new(spec.n_bins).forward(&truth.time_signal);
        let scale = norm(&truth.spectrum).max(1e-300);
        let err = back.iter().zip(&truth.spectrum).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-10 * scale);
        prop_assert!((norm(&truth.time_signal) - norm(&truth.spectrum)).abs() <= 1e-10 * scale);
        for (k, c) in truth.spectrum.iter().enumerate() {
            let f = k as f64 * spec.bin_hz();
            let inside = spec.active_bands.iter().any(|b| b.low_hz <= f && f < b.high_hz);
            if !inside {
                prop_assert_eq!(*c, C64::default());
            }
        }
        prop_assert_eq!(&truth, &generate_multiband(&spec, seed).unwrap());
    }

    #[test]
    fn magnitudes_within_levels(spec in spec_strategy(), seed: u64) {
        let truth = generate_multiband(&spec, seed).unwrap();
        for b in &spec.active_bands {
            for (k, c) in truth.spectrum.iter().enumerate() {
                let f = k as f64 * spec.bin_hz();
                if b.low_hz <= f && f < b.high_hz {
                    prop_assert!(c.norm() >= b.level_low - 1e-12 && c.norm() <= b.level_high + 1e-12);
                }
            }
        }
    }
}

#[test]
fn default_scenario_support_is_sections_2_4_6_8() {
    let cfg = Preset::Table1.config();
    let plan = cfg.plan().unwrap();
    let truth = generate_multiband(&cfg.signal, 11).unwrap();
    let e = true_subband_energy(&truth, &plan).unwrap();
    let active: Vec<usize> = (0..plan.len()).filter(|&k| e.energies[k] > 0.0).map(|k| k + 1).collect();
    assert_eq!(active, vec![2, 4, 6, 8]);
    let total: f64 = e.energies.iter().map(|x| x * x).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

fn empirical_snr(snr_db: f64, seed: u64) -> f64 {
    let cfg = Preset::Table1.config();
    let clean = generate_multiband(&cfg.signal, seed).unwrap();
    let noisy = add_awgn(&clean, snr_db, seed.wrapping_add(1000)).unwrap();
    let ps: f64 = clean.time_signal.iter().map(|c| c.norm_sqr()).sum();
    let pn: f64 = noisy
        .noisy_signal
        .iter()
        .zip(&clean.time_signal)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    10.0 * (ps / pn).log10()
}

#[test]
fn awgn_hits_requested_snr() {
    let zero: Vec<f64> = (0..100).map(|s| empirical_snr(0.0, s)).collect();
    let mean0 = zero.iter().sum::<f64>() / 100.0;
    assert!(mean0.abs() <= 0.5, "mean empirical SNR {mean0}");
    for s in 0..100 {
        let v = empirical_snr(11.5, s);
        assert!((11.0..=12.0).contains(&v), "seed {s}: {v} dB");
    }
}

#[test]
fn infinite_snr_is_noiseless_and_zero_signal_rejected() {
    let cfg = Preset::Table1.config();
    let clean = generate_multiband(&cfg.signal, 2).unwrap();
    assert_eq!(add_awgn(&clean, f64::INFINITY, 9).unwrap().noisy_signal, clean.time_signal);
    let mut empty = cfg.signal.clone();
    empty.active_bands.clear();
    let zero = generate_multiband(&empty, 0).unwrap();
    assert!(zero.spectrum.iter().all(|c| *c == C64::default()));
    assert!(zero.time_signal.iter().all(|c| *c == C64::default()));
    assert!(add_awgn(&zero, 10.0, 0).is_err());
}

#[test]
fn awgn_is_deterministic() {
    let cfg = Preset::Table1.config();
    let clean = generate_multiband(&cfg.signal, 2).unwrap();
    assert_eq!(add_awgn(&clean, 3.0, 5).unwrap(), add_awgn(&clean, 3.0, 5).unwrap());
    assert_ne!(add_awgn(&clean, 3.0, 5).unwrap(), add_awgn(&clean, 3.0, 6).unwrap());
}

#[test]
fn subband_energy_of_uniform_magnitude() {
    let plan = BandPlan::uniform(64, 4).unwrap();
    let r: Vec<C64> = (0..64).map(|i| C64::from_polar(3.0, i as f64)).collect();
    for e in subband_energies(&r, &plan).unwrap().energies {
        assert!((e - 0.5).abs() < 1e-12);
    }
}
