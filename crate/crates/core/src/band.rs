//! Fixed spectrum allocation expressed as contiguous frequency-bin sections.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partition of `[0, n)` into `K` nonempty, possibly unequal, half-open
/// sections `[0, d_1), [d_1, d_2), …, [d_{K-1}, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandPlan {
    n: usize,
    boundaries: Vec<usize>,
}

impl BandPlan {
    /// Builds a plan from interior boundaries, which must be strictly
    /// increasing and lie in `1..n`.
    pub fn new(n: usize, boundaries: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPlan("plan must cover at least one bin".into()));
        }
        let mut prev = 0;
        for &d in &boundaries {
            if d <= prev || d >= n {
                return Err(Error::InvalidPlan(format!(
                    "boundary {d} must be strictly increasing within 1..{n} (previous {prev})"
                )));
            }
            prev = d;
        }
        Ok(Self { n, boundaries })
    }

    /// A single section spanning everything.
    pub fn whole(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    /// `k` sections of equal length; `n` must be divisible by `k`.
    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        if k == 0 || !n.is_multiple_of(k) {
            return Err(Error::InvalidPlan(format!(
                "{n} bins cannot be split into {k} equal sections"
            )));
        }
        let d0 = n / k;
        Self::new(n, (1..k).map(|i| i * d0).collect())
    }

    /// Every bin its own section. Group norms then reduce to the ℓ1 norm.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new(n, (1..n).collect())
    }

    /// Maps boundary frequencies in Hz onto the bin grid of `n` bins
    /// spanning `nyquist_hz`, using the same rounding as band synthesis so
    /// that an active band bounded by plan edges falls in exactly one
    /// section.
    pub fn from_hz(n: usize, nyquist_hz: f64, boundaries_hz: &[f64]) -> Result<Self> {
        if !(nyquist_hz > 0.0) {
            return Err(Error::InvalidPlan("nyquist_hz must be positive".into()));
        }
        let mut bins = Vec::with_capacity(boundaries_hz.len());
        for &f in boundaries_hz {
            if !(f > 0.0 && f < nyquist_hz) {
                return Err(Error::InvalidPlan(format!(
                    "boundary {f} Hz lies outside (0, {nyquist_hz})"
                )));
            }
            bins.push(hz_to_bin(f, n, nyquist_hz));
        }
        Self::new(n, bins)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Number of sections `K`.
    pub fn len(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn section(&self, k: usize) -> Range<usize> {
        let start = if k == 0 { 0 } else { self.boundaries[k - 1] };
        let end = self.boundaries.get(k).copied().unwrap_or(self.n);
        start..end
    }

    pub fn sections(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.len()).map(move |k| self.section(k))
    }

    /// Index of the section containing `bin`.
    pub fn section_of(&self, bin: usize) -> Option<usize> {
        if bin >= self.n {
            return None;
        }
        Some(self.boundaries.partition_point(|&d| d <= bin))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }
}

/// First bin whose frequency `k·nyquist_hz/n` is at or above `f`.
pub fn hz_to_bin(f: f64, n: usize, nyquist_hz: f64) -> usize {
    let x = f * n as f64 / nyquist_hz;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_partition_the_grid() {
        let plan = BandPlan::new(10, vec![3, 4, 8]).unwrap();
        let s: Vec<_> = plan.sections().collect();
        assert_eq!(s, vec![0..3, 3..4, 4..8, 8..10]);
        assert_eq!(plan.len(), 4);
        assert_eq!(plan.section_of(0), Some(0));
        assert_eq!(plan.section_of(3), Some(1));
        assert_eq!(plan.section_of(7), Some(2));
        assert_eq!(plan.section_of(9), Some(3));
        assert_eq!(plan.section_of(10), None);
    }

    #[test]
    fn rejects_empty_sections() {
        assert!(BandPlan::new(10, vec![3, 3]).is_err());
        assert!(BandPlan::new(10, vec![0]).is_err());
        assert!(BandPlan::new(10, vec![10]).is_err());
        assert!(BandPlan::uniform(10, 3).is_err());
    }

    #[test]
    fn default_allocation_maps_to_bins() {
        let mhz = [30.0, 60.0, 120.0, 170.0, 300.0, 350.0, 420.0, 450.0].map(|f| f * 1e6);
        let plan = BandPlan::from_hz(1024, 500e6, &mhz).unwrap();
        assert_eq!(plan.boundaries(), &[62, 123, 246, 349, 615, 717, 861, 922]);
        assert_eq!(plan.len(), 9);
    }

    #[test]
    fn exact_grid_frequencies_do_not_round_up() {
        assert_eq!(hz_to_bin(250e6, 1024, 500e6), 512);
        assert_eq!(hz_to_bin(250.1e6, 1024, 500e6), 513);
    }
}
