//! Pilot-based channel estimation: least squares on DMRS cells, moving-average smoothing across
//! subcarriers, natural cubic spline across symbols.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use sidelink_core::Complex64;

use crate::error::{Error, Result};
use crate::phy::grid::ResourceGrid;
use crate::phy::pool::DMRS_SYMBOLS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChestConfig {
    /// Subcarriers averaged around each pilot (odd; 1 disables smoothing).
    pub freq_window: usize,
}

impl Default for ChestConfig {
    fn default() -> Self {
        Self { freq_window: 9 }
    }
}

impl ChestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.freq_window == 0 || self.freq_window.is_multiple_of(2) {
            return Err(Error::Config("freq_window must be odd and positive".into()));
        }
        Ok(())
    }
}

/// Natural cubic spline weights: `out[l][i]` is the weight of knot `i` at abscissa `l`.
/// Outside the knot span the spline is continued linearly with its end slope.
pub fn spline_weights(knots: &[usize], n_points: usize) -> Vec<Vec<f64>> {
    let n = knots.len();
    let x: Vec<f64> = knots.iter().map(|&k| k as f64).collect();
    let mut out = vec![vec![0.0; n]; n_points];
    for i in 0..n {
        let y: Vec<f64> = (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect();
        let spline = NaturalSpline::new(&x, &y);
        for (l, row) in out.iter_mut().enumerate() {
            row[i] = spline.eval(l as f64);
        }
    }
    out
}

struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations.
            let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            for i in 1..n - 1 {
                diag[i] = 2.0 * (h[i - 1] + h[i]);
                rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
            }
            for i in 2..n - 1 {
                let f = h[i - 1] / diag[i - 1];
                diag[i] -= f * h[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                let next = if i + 1 < n - 1 { h[i] * m[i + 1] } else { 0.0 };
                m[i] = (rhs[i] - next) / diag[i];
            }
        }
        Self { x: x.to_vec(), y: y.to_vec(), m }
    }

    fn segment(&self, i: usize, t: f64) -> f64 {
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    fn slope(&self, i: usize, at_right: bool) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let base = (self.y[i + 1] - self.y[i]) / h;
        if at_right {
            base + h * (self.m[i] + 2.0 * self.m[i + 1]) / 6.0
        } else {
            base - h * (2.0 * self.m[i] + self.m[i + 1]) / 6.0
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if n == 1 {
            return self.y[0];
        }
        if t < self.x[0] {
            return self.y[0] + (t - self.x[0]) * self.slope(0, false);
        }
        if t > self.x[n - 1] {
            return self.y[n - 1] + (t - self.x[n - 1]) * self.slope(n - 2, true);
        }
        let i = self.x.windows(2).position(|w| t <= w[1]).unwrap_or(n - 2);
        self.segment(i, t)
    }
}

/// Channel estimate over `subcarriers` for every symbol of the subframe, stored
/// `[l * m + (k - subcarriers.start)]`.
pub fn estimate_channel(
    rx: &ResourceGrid,
    subcarriers: Range<usize>,
    dmrs_ref: &[Complex64],
    weights: &[Vec<f64>],
    cfg: &ChestConfig,
) -> Result<Vec<Complex64>> {
    let m = subcarriers.len();
    if dmrs_ref.len() != m {
        return Err(Error::Config("reference length does not match the allocation".into()));
    }
    if dmrs_ref.iter().any(|r| r.norm_sqr() < 1e-24) {
        return Err(Error::Core(sidelink_core::Error::Degenerate("zero DMRS reference symbol".into())));
    }
    let half = cfg.freq_window / 2;
    let mut pilots = Vec::with_capacity(DMRS_SYMBOLS.len());
    let mut ls = vec![Complex64::new(0.0, 0.0); m];
    for &l in &DMRS_SYMBOLS {
        for (i, k) in subcarriers.clone().enumerate() {
            ls[i] = rx.get(k, l) / dmrs_ref[i];
        }
        let smoothed: Vec<Complex64> = if half == 0 {
            ls.clone()
        } else {
            // Prefix sums give every truncated window in O(m).
            let mut prefix = Vec::with_capacity(m + 1);
            prefix.push(Complex64::new(0.0, 0.0));
            for v in &ls {
                let last = *prefix.last().expect("non-empty");
                prefix.push(last + v);
            }
            (0..m)
                .map(|i| {
                    let lo = i.saturating_sub(half);
                    let hi = (i + half + 1).min(m);
                    (prefix[hi] - prefix[lo]) / (hi - lo) as f64
                })
                .collect()
        };
        pilots.push(smoothed);
    }
    let n_sym = weights.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n_sym * m];
    for (l, w) in weights.iter().enumerate() {
        let row = &mut out[l * m..(l + 1) * m];
        for (p, &wp) in pilots.iter().zip(w) {
            if wp != 0.0 {
                for (o, v) in row.iter_mut().zip(p) {
                    *o += v * wp;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_knots_and_lines() {
        let w = spline_weights(&DMRS_SYMBOLS, 14);
        for (i, &k) in DMRS_SYMBOLS.iter().enumerate() {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((w[k][j] - expect).abs() < 1e-12);
            }
        }
        // Natural splines reproduce straight lines, extrapolation included.
        for l in 0..14 {
            let v: f64 = w[l].iter().zip(DMRS_SYMBOLS).map(|(wi, k)| wi * (3.0 * k as f64 - 1.0)).sum();
            assert!((v - (3.0 * l as f64 - 1.0)).abs() < 1e-9, "{l}: {v}");
            assert!((w[l].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spline_matches_hand_solution() {
        // Knots 0,1,2 with values 0,1,0: natural spline has M1 = -3, so s(0.5) = 0.6875.
        let s = NaturalSpline::new(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]);
        assert!((s.m[1] + 3.0).abs() < 1e-12);
        assert!((s.eval(0.5) - 0.6875).abs() < 1e-12);
    }
}
