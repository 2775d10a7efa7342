//! Subband energy detection and the EDPER comparison against the BPDN baseline.

use serde::{Deserialize, Serialize};

use crate::band::BandPlan;
use crate::error::{Error, Result};
use crate::{norm2, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<C64>,
    /// Input was identically zero; `values` is all zeros.
    pub degenerate: bool,
}

/// Scales `r` to unit ℓ2 norm.
pub fn normalize_total(r: &[C64]) -> Normalized {
    let norm = norm2(r);
    if norm == 0.0 || !norm.is_finite() {
        return Normalized {
            values: vec![C64::default(); r.len()],
            degenerate: true,
        };
    }
    Normalized {
        values: r.iter().map(|c| c / norm).collect(),
        degenerate: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandEnergies {
    /// ℓ2 norm of each section of the normalised spectrum.
    pub energies: Vec<f64>,
    pub degenerate: bool,
}

impl SubbandEnergies {
    pub fn squared(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e * e).collect()
    }
}

pub fn subband_energies(r: &[C64], plan: &BandPlan) -> Result<SubbandEnergies> {
    plan.check_len(r.len())?;
    let Normalized { values, degenerate } = normalize_total(r);
    Ok(SubbandEnergies {
        energies: plan.sections().map(|s| norm2(&values[s])).collect(),
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyReport {
    pub energies: Vec<f64>,
    pub occupied: Vec<bool>,
    pub threshold: f64,
    pub degenerate: bool,
}

impl OccupancyReport {
    /// Indices of unoccupied sections.
    pub fn holes(&self) -> Vec<usize> {
        self.occupied
            .iter()
            .enumerate()
            .filter_map(|(k, &o)| (!o).then_some(k))
            .collect()
    }
}

/// Marks section `k` occupied iff its energy exceeds `threshold`.
pub fn detect_holes(energies: &SubbandEnergies, threshold: f64) -> Result<OccupancyReport> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "detection threshold must be positive, got {threshold}"
        )));
    }
    Ok(OccupancyReport {
        occupied: energies.energies.iter().map(|&e| e > threshold).collect(),
        energies: energies.energies.clone(),
        threshold,
        degenerate: energies.degenerate,
    })
}

/// Per-section enhancement ratio of `other` against `baseline`, both given
/// as squared section norms of normalised spectra. Active sections measure
/// energy gained, inactive sections energy removed. `None` where the
/// baseline section is empty and the ratio is undefined.
pub fn enhancement_ratio(baseline_sq: &[f64], other_sq: &[f64], active: &[bool]) -> Vec<Option<f64>> {
    baseline_sq
        .iter()
        .zip(other_sq)
        .zip(active)
        .map(|((&b, &o), &act)| {
            if b == 0.0 {
                None
            } else if act {
                Some((o - b) / b)
            } else {
                Some((b - o) / b)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdperResult {
    /// VLBS against BPDN.
    pub r1: Vec<Option<f64>>,
    /// EVLBS against BPDN.
    pub r2: Vec<Option<f64>>,
    pub active_mask: Vec<bool>,
}

pub fn edper(
    bpdn: &[C64],
    vlbs: &[C64],
    evlbs: &[C64],
    plan: &BandPlan,
    active_mask: &[bool],
) -> Result<EdperResult> {
    if active_mask.len() != plan.len() {
        return Err(Error::LengthMismatch {
            expected: plan.len(),
            actual: active_mask.len(),
        });
    }
    let base = subband_energies(bpdn, plan)?.squared();
    let v = subband_energies(vlbs, plan)?.squared();
    let e = subband_energies(evlbs, plan)?.squared();
    Ok(EdperResult {
        r1: enhancement_ratio(&base, &v, active_mask),
        r2: enhancement_ratio(&base, &e, active_mask),
        active_mask: active_mask.to_vec(),
    })
}
