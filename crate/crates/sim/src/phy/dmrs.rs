//! Demodulation reference signals: cyclically extended Zadoff-Chu sequences with a cyclic shift.

use std::f64::consts::PI;

use sidelink_core::Complex64;

use crate::error::{Error, Result};

pub const CYCLIC_SHIFTS: [u32; 4] = [0, 3, 6, 9];

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Largest prime below `m` (the Zadoff-Chu length for an allocation of `m` subcarriers).
pub fn zc_length(m: usize) -> usize {
    (2..m).rev().find(|&n| is_prime(n)).unwrap_or(2)
}

/// Base sequence of length `m` for root `u`.
pub fn base_sequence(m: usize, u: usize) -> Vec<Complex64> {
    let nzc = zc_length(m);
    let u = (u % (nzc - 1).max(1)).max(1) as f64;
    (0..m)
        .map(|n| {
            let k = (n % nzc) as f64;
            Complex64::from_polar(1.0, -PI * u * k * (k + 1.0) / nzc as f64)
        })
        .collect()
}

/// Reference symbols for one DMRS symbol of an `m`-subcarrier allocation.
pub fn generate_dmrs(m: usize, root: usize, cyclic_shift: u32) -> Result<Vec<Complex64>> {
    if !CYCLIC_SHIFTS.contains(&cyclic_shift) {
        return Err(Error::Config(format!("cyclic shift {cyclic_shift} not in {CYCLIC_SHIFTS:?}")));
    }
    if m < 3 {
        return Err(Error::Config("DMRS allocation too small".into()));
    }
    let alpha = 2.0 * PI * f64::from(cyclic_shift) / 12.0;
    Ok(base_sequence(m, root)
        .into_iter()
        .enumerate()
        .map(|(n, r)| r * Complex64::from_polar(1.0, alpha * n as f64))
        .collect())
}
