//! Synthetic multiband signals with a known sparse spectrum.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::band::{hz_to_bin, BandPlan};
use crate::detection::{subband_energies, SubbandEnergies};
use crate::dft::UnitaryDft;
use crate::error::{Error, Result};
use crate::{norm2, C64};

/// One occupied band and the range its per-bin spectrum magnitude is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveBand {
    pub low_hz: f64,
    pub high_hz: f64,
    pub level_low: f64,
    pub level_high: f64,
}

impl ActiveBand {
    pub fn new(low_hz: f64, high_hz: f64, level_low: f64, level_high: f64) -> Self {
        Self {
            low_hz,
            high_hz,
            level_low,
            level_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    /// Nyquist-grid length `N`.
    pub n_bins: usize,
    /// Frequency span covered by the `N` bins; bin `k` sits at `k·nyquist_hz/N`.
    pub nyquist_hz: f64,
    pub active_bands: Vec<ActiveBand>,
    pub snr_db: f64,
    /// Draw an independent uniform phase for every active bin.
    pub random_phase: bool,
}

impl SignalSpec {
    /// Checks the spec and returns the bin range of every active band.
    pub fn band_bins(&self) -> Result<Vec<std::ops::Range<usize>>> {
        if self.n_bins < 2 {
            return Err(Error::InvalidSpec(format!(
                "n_bins must be at least 2, got {}",
                self.n_bins
            )));
        }
        if !(self.nyquist_hz > 0.0 && self.nyquist_hz.is_finite()) {
            return Err(Error::InvalidSpec("nyquist_hz must be positive".into()));
        }
        let mut ranges = Vec::with_capacity(self.active_bands.len());
        for (i, b) in self.active_bands.iter().enumerate() {
            if !(b.low_hz >= 0.0 && b.low_hz < b.high_hz && b.high_hz <= self.nyquist_hz) {
                return Err(Error::InvalidSpec(format!(
                    "band {i} [{}, {}) Hz must be nonempty and inside [0, {})",
                    b.low_hz, b.high_hz, self.nyquist_hz
                )));
            }
            if !(b.level_low >= 0.0 && b.level_low <= b.level_high && b.level_high.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "band {i} levels must satisfy 0 <= low <= high, got [{}, {}]",
                    b.level_low, b.level_high
                )));
            }
            let lo = hz_to_bin(b.low_hz, self.n_bins, self.nyquist_hz);
            let hi = hz_to_bin(b.high_hz, self.n_bins, self.nyquist_hz).min(self.n_bins);
            if hi <= lo {
                return Err(Error::InvalidSpec(format!(
                    "band {i} [{}, {}) Hz is narrower than one bin",
                    b.low_hz, b.high_hz
                )));
            }
            ranges.push(lo..hi);
        }
        let mut order: Vec<usize> = (0..ranges.len()).collect();
        order.sort_by_key(|&i| ranges[i].start);
        for w in order.windows(2) {
            let (a, b) = (&self.active_bands[w[0]], &self.active_bands[w[1]]);
            if b.low_hz < a.high_hz || ranges[w[1]].start < ranges[w[0]].end {
                return Err(Error::InvalidSpec(format!(
                    "bands {} and {} overlap",
                    w[0], w[1]
                )));
            }
        }
        Ok(ranges)
    }

    /// Total number of active bins (the sparsity level).
    pub fn sparsity(&self) -> Result<usize> {
        Ok(self.band_bins()?.iter().map(|r| r.len()).sum())
    }

    pub fn bin_hz(&self) -> f64 {
        self.nyquist_hz / self.n_bins as f64
    }
}

/// Known-answer spectrum and the time-domain signals derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spectrum: Vec<C64>,
    pub time_signal: Vec<C64>,
    pub noisy_signal: Vec<C64>,
    /// ℓ2 norm of the spectrum inside each active band, in spec order.
    pub band_energies: Vec<f64>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.spectrum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectrum.is_empty()
    }
}

pub fn generate_multiband(spec: &SignalSpec, seed: u64) -> Result<GroundTruth> {
    let ranges = spec.band_bins()?;
    let n = spec.n_bins;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum = vec![C64::default(); n];
    let mut band_energies = Vec::with_capacity(ranges.len());
    for (band, range) in spec.active_bands.iter().zip(&ranges) {
        for bin in range.clone() {
            let mag = if band.level_high > band.level_low {
                rng.random_range(band.level_low..=band.level_high)
            } else {
                band.level_low
            };
            let phase = if spec.random_phase {
                rng.random_range(0.0..2.0 * PI)
            } else {
                0.0
            };
            spectrum[bin] = C64::from_polar(mag, phase);
        }
        band_energies.push(norm2(&spectrum[range.clone()]));
    }
    let time_signal = UnitaryDft::new(n).inverse(&spectrum);
    Ok(GroundTruth {
        noisy_signal: time_signal.clone(),
        spectrum,
        time_signal,
        band_energies,
    })
}

/// Adds circular complex white Gaussian noise whose expected power sits
/// `snr_db` below the signal power. `snr_db = +inf` leaves the signal clean.
pub fn add_awgn(truth: &GroundTruth, snr_db: f64, seed: u64) -> Result<GroundTruth> {
    let mut out = truth.clone();
    if snr_db == f64::INFINITY {
        out.noisy_signal = truth.time_signal.clone();
        return Ok(out);
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("snr_db is NaN".into()));
    }
    let n = truth.time_signal.len();
    let signal_power = truth.time_signal.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
    if signal_power == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let noise_power = signal_power / 10f64.powf(snr_db / 10.0);
    let sigma = (noise_power / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.noisy_signal = truth
        .time_signal
        .iter()
        .map(|&x| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            x + C64::new(re, im) * sigma
        })
        .collect();
    Ok(out)
}

/// Normalised ℓ2 energy of the true spectrum in each plan section.
pub fn true_subband_energy(truth: &GroundTruth, plan: &BandPlan) -> Result<SubbandEnergies> {
    subband_energies(&truth.spectrum, plan)
}
