//! Random sub-Nyquist acquisition and the partial-Fourier measurement operator.
//!
//! The analog-to-information converter is modelled as a Nyquist-rate ADC
//! followed by keeping `M` of the `N` samples at random. In the spectral
//! domain the measurement operator is `A = S·F⁻¹`, the selected rows of the
//! unitary inverse DFT, so `A·Aᴴ = I_M`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dft::UnitaryDft;
use crate::error::{Error, Result};
use crate::signal::GroundTruth;
use crate::C64;

/// Largest grid for which [`SamplingPattern::dense_matrix`] is available.
pub const DENSE_MAX_N: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPattern {
    pub n: usize,
    /// Strictly increasing sample positions in `[0, n)`.
    pub indices: Vec<usize>,
    pub seed: u64,
}

impl SamplingPattern {
    /// Validating constructor for externally supplied patterns.
    pub fn from_indices(n: usize, mut indices: Vec<usize>, seed: u64) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() || indices.len() > n {
            return Err(Error::InvalidArgument(format!(
                "pattern needs between 1 and {n} samples, got {}",
                indices.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) || indices[indices.len() - 1] >= n {
            return Err(Error::InvalidArgument(
                "pattern indices must be distinct and inside the grid".into(),
            ));
        }
        Ok(Self { n, indices, seed })
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn ratio(&self) -> f64 {
        self.m() as f64 / self.n as f64
    }

    /// Explicit `M × N` matrix of the operator, for small-grid test oracles.
    pub fn dense_matrix(&self) -> Result<DMatrix<C64>> {
        if self.n > DENSE_MAX_N {
            return Err(Error::InvalidArgument(format!(
                "dense operator limited to n <= {DENSE_MAX_N}, got {}",
                self.n
            )));
        }
        let scale = 1.0 / (self.n as f64).sqrt();
        Ok(DMatrix::from_fn(self.m(), self.n, |row, k| {
            let t = self.indices[row];
            C64::from_polar(scale, 2.0 * PI * ((k * t) % self.n) as f64 / self.n as f64)
        }))
    }
}

/// Draws `round(ratio·n)` sample positions uniformly without replacement.
pub fn draw_pattern(n: usize, ratio: f64, seed: u64) -> Result<SamplingPattern> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sub-sampling ratio must be in (0, 1], got {ratio}"
        )));
    }
    if (ratio * n as f64).floor() < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "ratio {ratio} keeps no samples out of {n}"
        )));
    }
    let m = ((ratio * n as f64).round() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = rand::seq::index::sample(&mut rng, n, m).into_vec();
    indices.sort_unstable();
    Ok(SamplingPattern { n, indices, seed })
}

/// `y_t[m] = x[indices[m]]` on the noisy Nyquist-rate signal.
pub fn acquire(truth: &GroundTruth, pattern: &SamplingPattern) -> Result<Vec<C64>> {
    if truth.noisy_signal.len() != pattern.n {
        return Err(Error::LengthMismatch {
            expected: pattern.n,
            actual: truth.noisy_signal.len(),
        });
    }
    Ok(pattern
        .indices
        .iter()
        .map(|&i| truth.noisy_signal[i])
        .collect())
}

/// Matrix-free `A = S·F⁻¹` with cached FFT plans.
#[derive(Debug, Clone)]
pub struct PartialFourier {
    pattern: SamplingPattern,
    dft: UnitaryDft,
}

impl PartialFourier {
    pub fn new(pattern: SamplingPattern) -> Self {
        let dft = UnitaryDft::new(pattern.n);
        Self { pattern, dft }
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn m(&self) -> usize {
        self.pattern.m()
    }

    pub fn forward(&self, r: &[C64]) -> Result<Vec<C64>> {
        check(self.n(), r.len())?;
        let mut out = vec![C64::default(); self.m()];
        self.forward_into(r, &mut out, &mut Workspace::default());
        Ok(out)
    }

    pub fn adjoint(&self, y: &[C64]) -> Result<Vec<C64>> {
        check(self.m(), y.len())?;
        let mut out = vec![C64::default(); self.n()];
        self.adjoint_into(y, &mut out, &mut Workspace::default());
        Ok(out)
    }

    /// Unchecked `out = A·r`; lengths must already match.
    pub(crate) fn forward_into(&self, r: &[C64], out: &mut [C64], ws: &mut Workspace) {
        ws.buf.clear();
        ws.buf.extend_from_slice(r);
        self.dft.inverse_in_place(&mut ws.buf, &mut ws.scratch);
        for (o, &i) in out.iter_mut().zip(&self.pattern.indices) {
            *o = ws.buf[i];
        }
    }

    /// Unchecked `out = Aᴴ·y`: scatter onto the grid, then forward DFT.
    pub(crate) fn adjoint_into(&self, y: &[C64], out: &mut [C64], ws: &mut Workspace) {
        out.iter_mut().for_each(|c| *c = C64::default());
        for (&v, &i) in y.iter().zip(&self.pattern.indices) {
            out[i] = v;
        }
        self.dft.forward_in_place(out, &mut ws.scratch);
    }
}

#[derive(Debug, Default)]
pub(crate) struct Workspace {
    buf: Vec<C64>,
    scratch: Vec<C64>,
}

/// Applies `A` without constructing a [`PartialFourier`].
pub fn forward(r: &[C64], pattern: &SamplingPattern) -> Result<Vec<C64>> {
    PartialFourier::new(pattern.clone()).forward(r)
}

pub fn adjoint(y: &[C64], pattern: &SamplingPattern) -> Result<Vec<C64>> {
    PartialFourier::new(pattern.clone()).adjoint(y)
}

fn check(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_ratio_keeps_every_sample() {
        let p = draw_pattern(16, 1.0, 5).unwrap();
        assert_eq!(p.indices, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn counts_and_ranges() {
        let p = draw_pattern(10, 0.4, 11).unwrap();
        assert_eq!(p.m(), 4);
        assert!(p.indices.windows(2).all(|w| w[0] < w[1]));
        assert!(p.indices.iter().all(|&i| i < 10));
        assert_eq!(draw_pattern(1024, 0.40, 0).unwrap().m(), 410);
    }

    #[test]
    fn rejects_bad_ratios() {
        for r in [0.0, -0.1, 1.3, f64::NAN] {
            assert!(draw_pattern(16, r, 0).is_err(), "ratio {r}");
        }
        assert!(draw_pattern(10, 0.05, 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(draw_pattern(100, 0.3, 42).unwrap(), draw_pattern(100, 0.3, 42).unwrap());
        assert_ne!(
            draw_pattern(100, 0.3, 42).unwrap().indices,
            draw_pattern(100, 0.3, 43).unwrap().indices
        );
    }

    #[test]
    fn unit_bin_maps_to_dft_column() {
        let p = draw_pattern(32, 0.4, 2).unwrap();
        let k = 7;
        let mut r = vec![C64::default(); 32];
        r[k] = C64::new(1.0, 0.0);
        let y = forward(&r, &p).unwrap();
        for (v, &t) in y.iter().zip(&p.indices) {
            let want = C64::from_polar(1.0 / 32f64.sqrt(), 2.0 * PI * (k * t) as f64 / 32.0);
            assert!((v - want).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let p = draw_pattern(32, 0.4, 2).unwrap();
        assert!(forward(&[C64::default(); 32], &p).unwrap().iter().all(|c| c.norm() == 0.0));
        assert!(adjoint(&vec![C64::default(); p.m()], &p)
            .unwrap()
            .iter()
            .all(|c| c.norm() == 0.0));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let p = draw_pattern(32, 0.4, 2).unwrap();
        assert!(matches!(
            forward(&[C64::default(); 31], &p),
            Err(Error::LengthMismatch { expected: 32, actual: 31 })
        ));
        assert!(adjoint(&[C64::default(); 3], &p).is_err());
        assert!(draw_pattern(65, 0.5, 0).unwrap().dense_matrix().is_err());
    }
}
