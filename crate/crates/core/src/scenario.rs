//! Highway world model: placement, pathloss, shadowing and link budgets.

use alloc::vec::Vec;

use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fading::SPEED_OF_LIGHT;
use crate::rng;

/// Large-scale propagation model for vehicle-to-vehicle links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathlossModel {
    /// WINNER II B1 (urban micro) LOS.
    B1,
    /// WINNER II D1 (rural macro) LOS.
    D1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropMode {
    /// Fixed IVD lattice with a random common offset per lane.
    Deterministic,
    /// Each gap jittered uniformly by up to 10% of the IVD.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub highway_length_m: f64,
    pub lanes: u32,
    pub lane_width_m: f64,
    pub isd_m: f64,
    /// Lateral offset of the base-station line from the highway edge.
    pub bs_offset_m: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub tx_ant_gain_db: f64,
    pub rx_ant_gain_db: f64,
    pub noise_figure_db: f64,
    pub comm_range_m: f64,
    pub ivd_m: f64,
    pub velocity_kmh: f64,
    pub packet_bytes: u32,
    pub tx_period_hz: f64,
    pub prr_threshold_bler: f64,
    pub pathloss_model: PathlossModel,
    /// Subtracted from antenna heights before computing the breakpoint distance.
    pub effective_height_reduction_m: f64,
    pub shadow_sigma_db: f64,
    pub drop_mode: DropMode,
    /// Vehicles closer than this to either highway end are never tagged transmitters.
    pub edge_exclusion_m: f64,
    /// Scheduling window in subframes; every vehicle holds one resource per window.
    pub window_subframes: u32,
    pub subchannels: u32,
    /// Overrides the grid-derived spectral efficiency used for the supported-UE count.
    pub spectral_efficiency: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            highway_length_m: 3000.0,
            lanes: 6,
            lane_width_m: 4.0,
            isd_m: 1732.0,
            bs_offset_m: 10.0,
            bs_height_m: 35.0,
            ue_height_m: 1.5,
            carrier_hz: 5.9e9,
            bandwidth_hz: 10e6,
            tx_power_dbm: 24.0,
            tx_ant_gain_db: 0.0,
            rx_ant_gain_db: 3.0,
            noise_figure_db: 9.0,
            comm_range_m: 400.0,
            ivd_m: 100.0,
            velocity_kmh: 100.0,
            packet_bytes: 256,
            tx_period_hz: 10.0,
            prr_threshold_bler: 0.01,
            pathloss_model: PathlossModel::B1,
            effective_height_reduction_m: 0.0,
            shadow_sigma_db: 3.0,
            drop_mode: DropMode::Deterministic,
            edge_exclusion_m: 400.0,
            window_subframes: 100,
            subchannels: 3,
            spectral_efficiency: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("highway_length_m", self.highway_length_m),
            ("lane_width_m", self.lane_width_m),
            ("isd_m", self.isd_m),
            ("bs_height_m", self.bs_height_m),
            ("ue_height_m", self.ue_height_m),
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("comm_range_m", self.comm_range_m),
            ("ivd_m", self.ivd_m),
            ("tx_period_hz", self.tx_period_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(alloc::format!("{name} must be positive, got {v}")));
            }
        }
        if self.lanes == 0 || !self.lanes.is_multiple_of(2) {
            return Err(invalid("lanes must be a positive even number"));
        }
        if self.packet_bytes == 0 || self.window_subframes == 0 || self.subchannels == 0 {
            return Err(invalid("packet size, window and subchannel count must be positive"));
        }
        if !(self.prr_threshold_bler > 0.0 && self.prr_threshold_bler < 1.0) {
            return Err(invalid("prr_threshold_bler must lie in (0, 1)"));
        }
        if !(self.velocity_kmh.is_finite() && self.velocity_kmh >= 0.0) {
            return Err(invalid("velocity_kmh must be non-negative"));
        }
        if !(self.shadow_sigma_db.is_finite() && self.shadow_sigma_db >= 0.0) {
            return Err(invalid("shadow_sigma_db must be non-negative"));
        }
        if !(self.edge_exclusion_m >= 0.0 && self.effective_height_reduction_m >= 0.0) {
            return Err(invalid("edge exclusion and height reduction must be non-negative"));
        }
        if self.ue_height_m - self.effective_height_reduction_m <= 0.0 {
            return Err(invalid("effective antenna height must stay positive"));
        }
        if let Some(se) = self.spectral_efficiency {
            if !(se.is_finite() && se > 0.0) {
                return Err(invalid("spectral_efficiency must be positive"));
            }
        }
        Ok(())
    }

    pub fn packet_bits(&self) -> u64 {
        u64::from(self.packet_bytes) * 8
    }

    pub fn resources(&self) -> usize {
        self.window_subframes as usize * self.subchannels as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub lane: u32,
    /// +1 for the forward carriageway, -1 for the opposite one.
    pub direction: i8,
    pub velocity_kmh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub vehicles: Vec<Vehicle>,
    pub base_stations: Vec<BaseStation>,
}

/// Places vehicles lane by lane and base stations every ISD from x = 0.
pub fn build_topology(cfg: &ScenarioConfig, seed: u64) -> Result<Topology> {
    cfg.validate()?;
    if cfg.ivd_m > cfg.highway_length_m {
        return Err(invalid("ivd_m exceeds the highway length: lanes would be empty"));
    }
    let len = cfg.highway_length_m;
    let mut vehicles = Vec::new();
    for lane in 0..cfg.lanes {
        let mut rng = rng::stream(seed, &[0x70b0, u64::from(lane)]);
        let offset = Uniform::new(0.0, cfg.ivd_m).map_err(|_| invalid("bad IVD"))?.sample(&mut rng);
        let direction = if lane < cfg.lanes / 2 { 1 } else { -1 };
        let y = (f64::from(lane) + 0.5) * cfg.lane_width_m;
        let mut push = |x: f64| {
            vehicles.push(Vehicle {
                id: vehicles.len(),
                x,
                y,
                lane,
                direction,
                velocity_kmh: cfg.velocity_kmh,
            })
        };
        match cfg.drop_mode {
            DropMode::Deterministic => {
                let mut k = 0u32;
                loop {
                    let x = offset + f64::from(k) * cfg.ivd_m;
                    if x >= len {
                        break;
                    }
                    push(x);
                    k += 1;
                }
            }
            DropMode::Random => {
                let jitter = Uniform::new_inclusive(-0.1, 0.1).map_err(|_| invalid("bad jitter"))?;
                let mut x = offset;
                while x < len {
                    push(x);
                    x += cfg.ivd_m * (1.0 + jitter.sample(&mut rng));
                }
            }
        }
    }
    let mut base_stations = Vec::new();
    let mut x = 0.0;
    while x < len {
        base_stations.push(BaseStation { id: base_stations.len(), x, y: -cfg.bs_offset_m });
        x += cfg.isd_m;
    }
    Ok(Topology { vehicles, base_stations })
}

impl Topology {
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (va, vb) = (&self.vehicles[a], &self.vehicles[b]);
        libm::hypot(va.x - vb.x, va.y - vb.y)
    }

    /// Every other vehicle within `range_m` (inclusive) of `tx`.
    pub fn neighbors_in_range(&self, tx: usize, range_m: f64) -> Result<Vec<usize>> {
        if tx >= self.vehicles.len() {
            return Err(invalid("transmitter not in topology"));
        }
        Ok((0..self.vehicles.len()).filter(|&i| i != tx && self.distance(tx, i) <= range_m).collect())
    }

    /// Vehicles eligible as tagged transmitters: farther than `margin_m` from both ends.
    pub fn interior(&self, length_m: f64, margin_m: f64) -> Vec<usize> {
        self.vehicles.iter().filter(|v| v.x >= margin_m && v.x <= length_m - margin_m).map(|v| v.id).collect()
    }
}

/// Breakpoint distance `4·h'_tx·h'_rx·f/c` of the two-slope models.
pub fn breakpoint_m(cfg: &ScenarioConfig) -> f64 {
    let h = cfg.ue_height_m - cfg.effective_height_reduction_m;
    4.0 * h * h * cfg.carrier_hz / SPEED_OF_LIGHT
}

/// LOS pathloss between two vehicle antennas; distances under 1 m are clamped.
pub fn pathloss_db(d_m: f64, cfg: &ScenarioConfig) -> f64 {
    let d = d_m.max(1.0);
    let f_ghz = cfg.carrier_hz / 1e9;
    let h = cfg.ue_height_m - cfg.effective_height_reduction_m;
    let d_bp = breakpoint_m(cfg);
    let log = libm::log10;
    match cfg.pathloss_model {
        PathlossModel::B1 => {
            if d <= d_bp {
                22.7 * log(d) + 41.0 + 20.0 * log(f_ghz / 5.0)
            } else {
                40.0 * log(d) + 9.45 - 34.6 * log(h) + 2.7 * log(f_ghz / 5.0)
            }
        }
        PathlossModel::D1 => {
            if d <= d_bp {
                21.5 * log(d) + 44.2 + 20.0 * log(f_ghz / 5.0)
            } else {
                40.0 * log(d) + 10.5 - 37.0 * log(h) + 1.5 * log(f_ghz / 5.0)
            }
        }
    }
}

/// One zero-mean Gaussian shadowing draw (in dB) for the ordered link `tx -> rx`.
pub fn shadow_fading_db(seed: u64, tx: usize, rx: usize, sigma_db: f64) -> f64 {
    if sigma_db == 0.0 {
        return 0.0;
    }
    let mut g = rng::keyed(seed, &[0x5ad0, tx as u64, rx as u64]);
    let z: f64 = StandardNormal.sample(&mut g);
    sigma_db * z
}

/// Received power in dBm: transmit power plus antenna gains minus pathloss and shadowing.
pub fn rx_power_dbm(d_m: f64, cfg: &ScenarioConfig, shadow_db: f64) -> f64 {
    rx_power_from_pathloss(cfg, pathloss_db(d_m, cfg), shadow_db)
}

pub fn rx_power_from_pathloss(cfg: &ScenarioConfig, pathloss_db: f64, shadow_db: f64) -> f64 {
    cfg.tx_power_dbm + cfg.tx_ant_gain_db + cfg.rx_ant_gain_db - pathloss_db - shadow_db
}

/// Thermal noise over the configured bandwidth.
pub fn noise_power_dbm(cfg: &ScenarioConfig) -> f64 {
    -174.0 + cfg.noise_figure_db + 10.0 * libm::log10(cfg.bandwidth_hz)
}

/// A uniform draw in (0, 1) keyed by the ordered link.
pub fn link_uniform(seed: u64, tx: usize, rx: usize) -> f64 {
    let mut g = rng::keyed(seed, &[0x0d1e, tx as u64, rx as u64]);
    // 53 random mantissa bits, shifted off zero.
    ((g.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}
