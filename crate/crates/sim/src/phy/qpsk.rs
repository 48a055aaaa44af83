//! Gray-mapped QPSK with unit average power.

use sidelink_core::Complex64;

use crate::error::{Error, Result};

pub const A: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Bit pair `(b0, b1)` maps to `((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`.
pub fn qpsk_map(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::Config("QPSK needs an even number of bits".into()));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|p| Complex64::new(if p[0] == 0 { A } else { -A }, if p[1] == 0 { A } else { -A }))
        .collect())
}

/// Max-log LLRs (positive favours bit 0). `noise_var[i]` is the complex noise variance of symbol
/// `i`; each quadrature carries half of it.
pub fn qpsk_soft_demap(symbols: &[Complex64], noise_var: &[f64]) -> Result<Vec<f64>> {
    if symbols.len() != noise_var.len() {
        return Err(Error::Config("one noise variance per symbol is required".into()));
    }
    if noise_var.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Config("noise variance must be positive".into()));
    }
    let mut out = Vec::with_capacity(2 * symbols.len());
    for (s, &v) in symbols.iter().zip(noise_var) {
        let g = 4.0 * A / v;
        out.push(g * s.re);
        out.push(g * s.im);
    }
    Ok(out)
}
