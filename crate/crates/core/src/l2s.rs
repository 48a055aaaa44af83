//! Link-to-system mapping: a BLER table indexed by SNR and velocity, produced by the link-level
//! campaign and consumed by the system-level engine.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// BLER values below this are treated as zero; it is also the floor used for log interpolation.
pub const BLER_FLOOR: f64 = 1e-6;

/// Raw Monte-Carlo counts behind a table, kept next to the smoothed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RawCounts {
    /// Unsmoothed BLER, `[velocity][snr]`.
    pub bler: Vec<Vec<f64>>,
    pub blocks: Vec<Vec<u64>>,
    pub errors: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TableMetadata {
    #[serde(default)]
    pub tool_version: String,
    #[serde(default)]
    pub config_hash: String,
    #[serde(default)]
    pub seed: u64,
    /// What counts as a block error, e.g. `"control_or_data"`.
    #[serde(default)]
    pub bler_definition: String,
    /// How SNR is referenced in the link-level chain.
    #[serde(default)]
    pub snr_definition: String,
    #[serde(default)]
    pub created: String,
    /// Transport-block size and coded length of the measured allocation.
    #[serde(default)]
    pub transport_block_bits: u64,
    #[serde(default)]
    pub coded_bits: u64,
    #[serde(default)]
    pub isotonic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawCounts>,
}

/// `bler[v][s]` is the block error rate at `velocities_kmh[v]` and `snr_grid_db[s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2sTable {
    pub snr_grid_db: Vec<f64>,
    pub velocities_kmh: Vec<f64>,
    pub bler: Vec<Vec<f64>>,
    #[serde(default)]
    pub metadata: TableMetadata,
}

impl L2sTable {
    /// Checks shapes, ordering and ranges. Rows need not be monotone.
    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() || self.velocities_kmh.is_empty() {
            return Err(invalid("table has an empty grid"));
        }
        if self.snr_grid_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("SNR grid must be strictly increasing"));
        }
        if self.velocities_kmh.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("velocity grid must be strictly increasing"));
        }
        if self.bler.len() != self.velocities_kmh.len()
            || self.bler.iter().any(|r| r.len() != self.snr_grid_db.len())
        {
            return Err(invalid("BLER matrix does not match the grids"));
        }
        if self.bler.iter().flatten().any(|&b| !(0.0..=1.0).contains(&b)) {
            return Err(invalid("BLER entries must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Positions `(velocity index, snr index)` where a row increases with SNR.
    pub fn monotonicity_violations(&self) -> Vec<(usize, usize)> {
        self.bler
            .iter()
            .enumerate()
            .flat_map(|(v, row)| {
                row.windows(2).enumerate().filter(|(_, w)| w[1] > w[0]).map(move |(s, _)| (v, s + 1))
            })
            .collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations().is_empty()
    }

    /// Index of the grid velocity nearest to `velocity_kmh`; ties go to the lower one.
    pub fn velocity_index(&self, velocity_kmh: f64) -> usize {
        let mut best = 0;
        for (i, &v) in self.velocities_kmh.iter().enumerate().skip(1) {
            if (v - velocity_kmh).abs() < (self.velocities_kmh[best] - velocity_kmh).abs() {
                best = i;
            }
        }
        best
    }

    /// BLER at `snr_db` on the row of the nearest grid velocity.
    ///
    /// Between knots, `log10(BLER)` is interpolated linearly in SNR with zeros floored at
    /// [`BLER_FLOOR`]; results under the floor read as zero. Below the grid the first entry is
    /// returned, above it zero.
    pub fn lookup(&self, snr_db: f64, velocity_kmh: f64) -> Result<f64> {
        if self.snr_grid_db.is_empty() || self.velocities_kmh.is_empty() || self.bler.is_empty() {
            return Err(invalid("lookup on an empty table"));
        }
        let row = &self.bler[self.velocity_index(velocity_kmh)];
        Ok(interpolate_row(&self.snr_grid_db, row, snr_db))
    }
}

fn interpolate_row(grid: &[f64], row: &[f64], snr_db: f64) -> f64 {
    let last = grid.len() - 1;
    if snr_db.is_nan() {
        return 1.0;
    }
    if snr_db <= grid[0] {
        return row[0];
    }
    if snr_db > grid[last] {
        return 0.0;
    }
    // First knot strictly above the query.
    let hi = grid.partition_point(|&g| g <= snr_db);
    if grid[hi - 1] == snr_db {
        return row[hi - 1];
    }
    let lo = hi - 1;
    let t = (snr_db - grid[lo]) / (grid[hi] - grid[lo]);
    let la = libm::log10(row[lo].max(BLER_FLOOR));
    let lb = libm::log10(row[hi].max(BLER_FLOOR));
    let value = libm::pow(10.0, la + t * (lb - la));
    if value <= BLER_FLOOR * (1.0 + 1e-9) {
        0.0
    } else {
        value.min(1.0)
    }
}

/// Weighted least-squares projection of `values` onto non-increasing sequences (pool adjacent
/// violators).
pub fn isotonic_non_increasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // Blocks of (weighted mean, total weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        let w = if w > 0.0 { w } else { 1e-12 };
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            if blocks[n - 2].0 >= blocks[n - 1].0 {
                break;
            }
            let (m2, w2, l2) = blocks.pop().expect("len > 1");
            let (m1, w1, l1) = blocks.pop().expect("len > 1");
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, l1 + l2));
        }
    }
    blocks.into_iter().flat_map(|(m, _, l)| core::iter::repeat_n(m, l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn table() -> L2sTable {
        L2sTable {
            snr_grid_db: vec![-2.0, 0.0, 2.0, 4.0],
            velocities_kmh: vec![100.0, 300.0, 500.0],
            bler: vec![vec![0.5, 0.1, 0.01, 0.0], vec![0.9, 0.4, 0.05, 0.001], vec![1.0, 0.9, 0.3, 0.02]],
            metadata: TableMetadata::default(),
        }
    }

    #[test]
    fn grid_points_are_exact() {
        let t = table();
        for (v, row) in t.velocities_kmh.iter().zip(&t.bler) {
            for (s, &b) in t.snr_grid_db.iter().zip(row) {
                assert_eq!(t.lookup(*s, *v).unwrap(), b);
            }
        }
    }

    #[test]
    fn log_linear_midpoint() {
        // Midway between 0.1 and 0.01 the log-linear rule gives their geometric mean.
        let v = table().lookup(1.0, 100.0).unwrap();
        assert!((v - 0.031_622_776_6).abs() < 1e-9, "{v}");
        assert!((v - 0.0316).abs() < 5e-5);
    }

    #[test]
    fn clamps_at_both_edges() {
        let t = table();
        assert_eq!(t.lookup(-40.0, 100.0).unwrap(), 0.5);
        assert_eq!(t.lookup(-2.0, 500.0).unwrap(), 1.0);
        assert_eq!(t.lookup(4.000_001, 500.0).unwrap(), 0.0);
        assert_eq!(t.lookup(60.0, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_entries_use_the_floor() {
        let t = table();
        // Between 0.01 and 0 (floored to 1e-6): a quarter of the way the log drops by one decade.
        let v = t.lookup(2.5, 100.0).unwrap();
        assert!((v - 1e-3).abs() < 1e-12, "{v}");
        let both_zero = L2sTable {
            bler: vec![vec![0.0, 0.0]],
            snr_grid_db: vec![0.0, 1.0],
            velocities_kmh: vec![100.0],
            metadata: TableMetadata::default(),
        };
        assert_eq!(both_zero.lookup(0.5, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn velocity_snaps_to_nearest_with_ties_low() {
        let t = table();
        assert_eq!(t.velocity_index(0.0), 0);
        assert_eq!(t.velocity_index(199.0), 0);
        assert_eq!(t.velocity_index(200.0), 0);
        assert_eq!(t.velocity_index(201.0), 1);
        assert_eq!(t.velocity_index(400.0), 1);
        assert_eq!(t.velocity_index(9999.0), 2);
    }

    #[test]
    fn empty_table_is_an_error() {
        let t = L2sTable {
            snr_grid_db: vec![],
            velocities_kmh: vec![],
            bler: vec![],
            metadata: TableMetadata::default(),
        };
        assert!(t.lookup(0.0, 100.0).is_err());
        assert!(t.validate().is_err());
    }

    #[test]
    fn validation_and_violations() {
        let mut t = table();
        assert!(t.validate().is_ok());
        assert!(t.is_monotone());
        t.bler[1][2] = 0.6;
        assert!(t.validate().is_ok());
        assert_eq!(t.monotonicity_violations(), vec![(1, 2)]);
        t.bler[0][0] = 1.5;
        assert!(t.validate().is_err());
    }

    #[test]
    fn isotonic_pools_violators() {
        let out = isotonic_non_increasing(&[0.9, 0.5, 0.6, 0.1, 0.2, 0.0], &[1.0; 6]);
        let expected = [0.9, 0.55, 0.55, 0.15, 0.15, 0.0];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{out:?}");
        }
        let weighted = isotonic_non_increasing(&[0.2, 0.4], &[3.0, 1.0]);
        assert!((weighted[0] - 0.25).abs() < 1e-12 && (weighted[1] - 0.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn lookup_is_monotone_on_monotone_rows(
            mut row in proptest::collection::vec(0.0f64..=1.0, 2..12),
            mut queries in proptest::collection::vec(-20.0f64..40.0, 2..50),
        ) {
            row.sort_by(|a, b| b.total_cmp(a));
            let grid: Vec<f64> = (0..row.len()).map(|i| -10.0 + 2.0 * i as f64).collect();
            let t = L2sTable {
                snr_grid_db: grid,
                velocities_kmh: vec![100.0],
                bler: vec![row],
                metadata: TableMetadata::default(),
            };
            queries.sort_by(f64::total_cmp);
            let values: Vec<f64> = queries.iter().map(|&q| t.lookup(q, 100.0).unwrap()).collect();
            for w in values.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
        }

        #[test]
        fn lookup_is_continuous_at_interior_knots(
            mut row in proptest::collection::vec(0.0f64..=1.0, 3..10),
        ) {
            row.sort_by(|a, b| b.total_cmp(a));
            let grid: Vec<f64> = (0..row.len()).map(|i| i as f64).collect();
            for k in 1..grid.len() - 1 {
                let left = interpolate_row(&grid, &row, grid[k] - 1e-9);
                let right = interpolate_row(&grid, &row, grid[k] + 1e-9);
                let at = interpolate_row(&grid, &row, grid[k]);
                let tol = 1e-6 * at.max(BLER_FLOOR);
                prop_assert!((left - at).abs() <= tol.max(1e-12) || at <= BLER_FLOOR);
                prop_assert!((right - at).abs() <= tol.max(1e-12) || at <= BLER_FLOOR);
            }
        }

        #[test]
        fn isotonic_output_is_monotone(values in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let out = isotonic_non_increasing(&values, &vec![1.0; values.len()]);
            prop_assert_eq!(out.len(), values.len());
            for w in out.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
            let s0: f64 = values.iter().sum();
            let s1: f64 = out.iter().sum();
            prop_assert!((s0 - s1).abs() < 1e-9);
        }
    }
}
