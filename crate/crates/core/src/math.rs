//! Decibel helpers shared by the link and system tiers.

/// Converts a power ratio in dB to linear scale.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Converts a linear power ratio to dB. Zero maps to negative infinity.
#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * libm::log10(lin)
}

/// Sums powers given in dBm in the linear domain and returns the total in dBm.
///
/// An empty iterator yields `f64::NEG_INFINITY` (no power at all).
pub fn sum_dbm<I: IntoIterator<Item = f64>>(powers_dbm: I) -> f64 {
    let total: f64 = powers_dbm.into_iter().map(db_to_linear).sum();
    linear_to_db(total)
}
