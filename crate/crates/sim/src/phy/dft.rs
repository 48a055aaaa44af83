//! Shared FFT plans and the unitary transforms built on them.

use std::collections::BTreeMap;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use sidelink_core::Complex64;

use crate::error::{Error, Result};

/// Forward and inverse plans for a fixed set of sizes; read-only once built.
#[derive(Clone)]
pub struct Plans {
    forward: BTreeMap<usize, Arc<dyn Fft<f64>>>,
    inverse: BTreeMap<usize, Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for Plans {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Plans").field("sizes", &self.forward.keys().collect::<Vec<_>>()).finish()
    }
}

impl Plans {
    pub fn new(sizes: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let mut forward = BTreeMap::new();
        let mut inverse = BTreeMap::new();
        for &n in sizes {
            forward.insert(n, planner.plan_fft_forward(n));
            inverse.insert(n, planner.plan_fft_inverse(n));
        }
        Self { forward, inverse }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) -> Result<()> {
        let n = data.len();
        let map = if inverse { &self.inverse } else { &self.forward };
        let plan = map.get(&n).ok_or_else(|| Error::Invariant(format!("no FFT plan for size {n}")))?;
        plan.process(data);
        let scale = 1.0 / (n as f64).sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
        Ok(())
    }

    /// Unitary forward DFT in place.
    pub fn forward(&self, data: &mut [Complex64]) -> Result<()> {
        self.run(data, false)
    }

    /// Unitary inverse DFT in place.
    pub fn inverse(&self, data: &mut [Complex64]) -> Result<()> {
        self.run(data, true)
    }

    /// DFT spreading of consecutive blocks of `m` symbols.
    pub fn transform_precode(&self, symbols: &[Complex64], m: usize) -> Result<Vec<Complex64>> {
        if m == 0 || !symbols.len().is_multiple_of(m) {
            return Err(Error::Config(format!("{} symbols do not split into blocks of {m}", symbols.len())));
        }
        let mut out = symbols.to_vec();
        for block in out.chunks_exact_mut(m) {
            self.forward(block)?;
        }
        Ok(out)
    }

    pub fn transform_deprecode(&self, symbols: &[Complex64], m: usize) -> Result<Vec<Complex64>> {
        if m == 0 || !symbols.len().is_multiple_of(m) {
            return Err(Error::Config(format!("{} symbols do not split into blocks of {m}", symbols.len())));
        }
        let mut out = symbols.to_vec();
        for block in out.chunks_exact_mut(m) {
            self.inverse(block)?;
        }
        Ok(out)
    }
}
