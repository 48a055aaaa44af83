//! System-level PRR campaign: drops over an (IVD, velocity, period) sweep.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sidelink_core::engine::{drop_seed, evaluate_drop, DropOutcome};
use sidelink_core::l2s::L2sTable;
use sidelink_core::scenario::ScenarioConfig;
use sidelink_core::stats::Summary;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrrSweepConfig {
    pub scenario: ScenarioConfig,
    pub ivds_m: Vec<f64>,
    pub velocities_kmh: Vec<f64>,
    pub periods_hz: Vec<f64>,
    pub drops: u64,
    pub seed: u64,
}

impl Default for PrrSweepConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            ivds_m: (1..=10).map(|i| f64::from(i) * 10.0).collect(),
            velocities_kmh: vec![100.0],
            periods_hz: vec![10.0],
            drops: 500,
            seed: 1,
        }
    }
}

impl PrrSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ivds_m.is_empty() || self.velocities_kmh.is_empty() || self.periods_hz.is_empty() {
            return Err(Error::Config("IVD, velocity and period lists must be non-empty".into()));
        }
        if self.drops == 0 {
            return Err(Error::Config("at least one drop is required".into()));
        }
        for p in self.sweep_points() {
            self.point_config(&p).validate()?;
        }
        Ok(())
    }

    /// Sweep points in output order: IVD-major, then velocity, then period.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &ivd_m in &self.ivds_m {
            for &velocity_kmh in &self.velocities_kmh {
                for &period_hz in &self.periods_hz {
                    out.push(SweepPoint { ivd_m, velocity_kmh, period_hz });
                }
            }
        }
        out
    }

    pub fn point_config(&self, p: &SweepPoint) -> ScenarioConfig {
        ScenarioConfig {
            ivd_m: p.ivd_m,
            velocity_kmh: p.velocity_kmh,
            tx_period_hz: p.period_hz,
            ..self.scenario.clone()
        }
    }

    /// Velocities of the sweep that the table does not carry.
    pub fn missing_velocities(&self, table: &L2sTable) -> Vec<f64> {
        self.velocities_kmh
            .iter()
            .copied()
            .filter(|v| !table.velocities_kmh.iter().any(|t| (t - v).abs() < 1e-6))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ivd_m: f64,
    pub velocity_kmh: f64,
    pub period_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrrPoint {
    pub ivd_m: f64,
    pub velocity_kmh: f64,
    pub period_hz: f64,
    pub mean_prr: f64,
    pub ci95: f64,
    pub drops: u64,
    pub ue_supported: u64,
    pub n_ue_mean: f64,
    /// Per-drop PRR in drop order, for paired comparisons.
    #[serde(skip)]
    pub per_drop: Vec<f64>,
    /// Tagged transmitters whose ratio product was clamped to 1.
    pub clamped: u64,
}

impl PrrPoint {
    pub fn summary(&self) -> Summary {
        self.per_drop.iter().copied().collect()
    }
}

/// Evaluates `cfg.drops` drops of one sweep point on the current rayon pool.
pub fn run_point(
    cfg: &PrrSweepConfig,
    table: &L2sTable,
    point: &SweepPoint,
    stop: &AtomicBool,
) -> Result<PrrPoint> {
    let scenario = cfg.point_config(point);
    let ue_supported = scenario.ue_supported()?;
    let outcomes: Vec<Result<DropOutcome>> = (0..cfg.drops)
        .into_par_iter()
        .map(|d| {
            if stop.load(Ordering::Relaxed) {
                return Err(Error::Interrupted);
            }
            Ok(evaluate_drop(&scenario, table, drop_seed(cfg.seed, point.ivd_m, d))?)
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let per_drop: Vec<f64> = outcomes.iter().map(|o| o.mean_prr).collect();
    let summary: Summary = per_drop.iter().copied().collect();
    let n_ue_mean = outcomes.iter().map(|o| o.n_ue_mean).sum::<f64>() / outcomes.len() as f64;
    Ok(PrrPoint {
        ivd_m: point.ivd_m,
        velocity_kmh: point.velocity_kmh,
        period_hz: point.period_hz,
        mean_prr: summary.mean(),
        ci95: summary.ci95(),
        drops: cfg.drops,
        ue_supported,
        n_ue_mean,
        per_drop,
        clamped: outcomes.iter().map(|o| o.clamped).sum(),
    })
}

#[derive(Debug, Clone)]
pub struct PrrOutcome {
    pub points: Vec<PrrPoint>,
    pub interrupted: bool,
}

/// Runs the sweep point by point; an interruption keeps the points finished so far.
pub fn run_sweep(
    cfg: &PrrSweepConfig,
    table: &L2sTable,
    stop: &AtomicBool,
    progress: &dyn Fn(&PrrPoint),
) -> Result<PrrOutcome> {
    cfg.validate()?;
    table.validate()?;
    let missing = cfg.missing_velocities(table);
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "velocity {missing:?} km/h not in table; available: {:?}",
            table.velocities_kmh
        )));
    }
    let mut points = Vec::new();
    for p in cfg.sweep_points() {
        match run_point(cfg, table, &p, stop) {
            Ok(r) => {
                progress(&r);
                points.push(r);
            }
            Err(Error::Interrupted) => return Ok(PrrOutcome { points, interrupted: true }),
            Err(e) => return Err(e),
        }
    }
    Ok(PrrOutcome { points, interrupted: false })
}
