//! Monte-Carlo BLER campaign over an SNR x velocity grid, producing the L2S table.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sidelink_core::l2s::{isotonic_non_increasing, L2sTable, RawCounts, TableMetadata};
use sidelink_core::rng::derive_seed;
use sidelink_core::stats::wilson_halfwidth;

use crate::error::{Error, Result};
use crate::link::{LinkConfig, LinkSim};

/// Blocks simulated between two stopping checks. Fixed so that results do not depend on
/// scheduling.
pub const BATCH: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub link: LinkConfig,
    pub snr_grid_db: Vec<f64>,
    pub velocities_kmh: Vec<f64>,
    pub blocks_per_point: u64,
    /// A point stops once it has this many errors and at least a quarter of its blocks.
    pub min_errors: u64,
    pub seed: u64,
    pub isotonic: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            link: LinkConfig::default(),
            snr_grid_db: (-10..=20).map(f64::from).collect(),
            velocities_kmh: vec![100.0, 260.0, 350.0, 400.0, 450.0, 500.0],
            blocks_per_point: 2000,
            min_errors: 50,
            seed: 1,
            isotonic: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if self.snr_grid_db.is_empty() || self.velocities_kmh.is_empty() {
            return Err(Error::Config("SNR grid and velocity set must be non-empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite())
            || self.snr_grid_db.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::Config("SNR grid must be finite and strictly increasing".into()));
        }
        if self.velocities_kmh.iter().any(|v| !(v.is_finite() && *v >= 0.0))
            || self.velocities_kmh.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::Config("velocities must be non-negative and strictly increasing".into()));
        }
        if self.blocks_per_point < 100 {
            return Err(Error::Config("blocks_per_point must be at least 100".into()));
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.snr_grid_db.len() * self.velocities_kmh.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlerPoint {
    pub snr_db: f64,
    pub velocity_kmh: f64,
    pub pscch_bler: f64,
    /// Error rate under the configured BLER definition.
    pub pssch_bler: f64,
    pub blocks: u64,
    pub errors: u64,
    pub ci95: f64,
}

/// Seed of one block.
pub fn block_seed(master: u64, snr_index: usize, velocity_index: usize, block: u64) -> u64 {
    derive_seed(master, &[snr_index as u64, velocity_index as u64, block])
}

/// Runs one grid point. Returns `Error::Interrupted` if `stop` is raised between batches.
pub fn run_point(
    sim: &LinkSim,
    cfg: &SweepConfig,
    snr_index: usize,
    velocity_index: usize,
    stop: &AtomicBool,
) -> Result<BlerPoint> {
    let snr = cfg.snr_grid_db[snr_index];
    let vel = cfg.velocities_kmh[velocity_index];
    let def = cfg.link.bler_definition;
    let min_blocks = cfg.blocks_per_point / 4;
    let (mut blocks, mut errors, mut control_errors) = (0u64, 0u64, 0u64);
    while blocks < cfg.blocks_per_point {
        if stop.load(Ordering::Relaxed) {
            return Err(Error::Interrupted);
        }
        let end = (blocks + BATCH).min(cfg.blocks_per_point);
        for b in blocks..end {
            let out = sim.run_subframe(snr, vel, block_seed(cfg.seed, snr_index, velocity_index, b))?;
            errors += u64::from(out.is_error(def));
            control_errors += u64::from(!out.control_ok);
        }
        blocks = end;
        if errors >= cfg.min_errors && blocks >= min_blocks {
            break;
        }
    }
    Ok(BlerPoint {
        snr_db: snr,
        velocity_kmh: vel,
        pscch_bler: control_errors as f64 / blocks as f64,
        pssch_bler: errors as f64 / blocks as f64,
        blocks,
        errors,
        ci95: wilson_halfwidth(errors, blocks),
    })
}

/// Result of a sweep. `points` are ordered velocity-major, then by SNR; an interrupted sweep
/// keeps only the points that finished.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<BlerPoint>,
    pub interrupted: bool,
}

impl SweepOutcome {
    pub fn is_complete(&self, cfg: &SweepConfig) -> bool {
        !self.interrupted && self.points.len() == cfg.n_points()
    }
}

/// Runs every grid point on the current rayon pool. `progress` sees each finished point.
pub fn run_sweep(
    cfg: &SweepConfig,
    stop: &AtomicBool,
    progress: &(dyn Fn(&BlerPoint) + Sync),
) -> Result<SweepOutcome> {
    cfg.validate()?;
    let sim = LinkSim::new(cfg.link.clone())?;
    let n_snr = cfg.snr_grid_db.len();
    let results: Vec<Result<BlerPoint>> = (0..cfg.n_points())
        .into_par_iter()
        .map(|i| {
            let p = run_point(&sim, cfg, i % n_snr, i / n_snr, stop)?;
            progress(&p);
            Ok(p)
        })
        .collect();
    let mut points = Vec::with_capacity(results.len());
    let mut interrupted = false;
    for r in results {
        match r {
            Ok(p) => points.push(p),
            Err(Error::Interrupted) => interrupted = true,
            Err(e) => return Err(e),
        }
    }
    Ok(SweepOutcome { points, interrupted })
}

/// Assembles the L2S table from a complete set of points. With `cfg.isotonic` each velocity row
/// is made non-increasing by block-weighted pool-adjacent-violators; raw counts are kept in the
/// metadata either way.
pub fn build_table(cfg: &SweepConfig, points: &[BlerPoint], mut metadata: TableMetadata) -> Result<L2sTable> {
    let n_snr = cfg.snr_grid_db.len();
    if points.len() != cfg.n_points() {
        return Err(Error::Invariant(format!("table needs {} points, got {}", cfg.n_points(), points.len())));
    }
    let mut raw = RawCounts::default();
    let mut bler = Vec::with_capacity(cfg.velocities_kmh.len());
    for row in points.chunks(n_snr) {
        let values: Vec<f64> = row.iter().map(|p| p.pssch_bler).collect();
        let weights: Vec<f64> = row.iter().map(|p| p.blocks as f64).collect();
        bler.push(if cfg.isotonic { isotonic_non_increasing(&values, &weights) } else { values.clone() });
        raw.bler.push(values);
        raw.blocks.push(row.iter().map(|p| p.blocks).collect());
        raw.errors.push(row.iter().map(|p| p.errors).collect());
    }
    metadata.isotonic = cfg.isotonic;
    metadata.raw = Some(raw);
    let table = L2sTable {
        snr_grid_db: cfg.snr_grid_db.clone(),
        velocities_kmh: cfg.velocities_kmh.clone(),
        bler,
        metadata,
    };
    table.validate()?;
    if cfg.isotonic && !table.is_monotone() {
        return Err(Error::Invariant("isotonic rows are not monotone".into()));
    }
    Ok(table)
}
