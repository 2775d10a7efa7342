//! Compressive wideband spectrum sensing.
//!
//! A multiband signal is synthesised on a Nyquist grid, observed through a
//! random subset of its time samples, and its spectrum is recovered with one
//! of three convex programs sharing a single matrix-free ADMM core:
//!
//! * `bpdn`: ℓ1 minimisation under a noise-ball data constraint,
//! * `vlbs`: sum of per-section ℓ2 norms, sections following a fixed band plan,
//! * `evlbs`: the iteratively reweighted version of `vlbs`.
//!
//! Recovered spectra are reduced to normalised subband energies, thresholded
//! into occupancy decisions and compared against the `bpdn` baseline.

pub mod band;
pub mod detection;
pub mod dft;
pub mod error;
pub mod harness;
pub mod sampling;
pub mod signal;
pub mod solver;

pub use band::BandPlan;
pub use error::{Error, Result};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex64;

pub(crate) fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
