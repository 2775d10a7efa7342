//! Unitary DFT pair on top of `rustfft`.
//!
//! `forward` computes `r[k] = N^{-1/2} Σ x[n] e^{-i2πkn/N}` and `inverse` its
//! adjoint, so both are orthonormal maps.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

#[derive(Clone)]
pub struct UnitaryDft {
    n: usize,
    scale: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("n", &self.n).finish()
    }
}

impl UnitaryDft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward_in_place(&self, buf: &mut [C64], scratch: &mut Vec<C64>) {
        debug_assert_eq!(buf.len(), self.n);
        scratch.resize(self.fwd.get_inplace_scratch_len(), C64::default());
        self.fwd.process_with_scratch(buf, scratch);
        buf.iter_mut().for_each(|c| *c *= self.scale);
    }

    pub fn inverse_in_place(&self, buf: &mut [C64], scratch: &mut Vec<C64>) {
        debug_assert_eq!(buf.len(), self.n);
        scratch.resize(self.inv.get_inplace_scratch_len(), C64::default());
        self.inv.process_with_scratch(buf, scratch);
        buf.iter_mut().for_each(|c| *c *= self.scale);
    }

    pub fn forward(&self, x: &[C64]) -> Vec<C64> {
        let mut buf = x.to_vec();
        self.forward_in_place(&mut buf, &mut Vec::new());
        buf
    }

    pub fn inverse(&self, r: &[C64]) -> Vec<C64> {
        let mut buf = r.to_vec();
        self.inverse_in_place(&mut buf, &mut Vec::new());
        buf
    }
}
