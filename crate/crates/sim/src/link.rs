//! One subframe through the full chain: transmitter, channel, receiver.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use sidelink_core::fading::{add_awgn, DelayProfile, FadingConfig, FadingRealization, Waveform};
use sidelink_core::rng::{derive_seed, stream};
use sidelink_core::Complex64;

use crate::error::{Error, Result};
use crate::phy::dmrs::CYCLIC_SHIFTS;
use crate::phy::grid::{scfdma_demodulate, scfdma_modulate, ResourceGrid};
use crate::phy::sci::SciMessage;
use crate::phy::{Phy, PhyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Extended Vehicular A with Jakes Doppler.
    Eva,
    /// Single Rayleigh tap with Jakes Doppler.
    Flat,
    /// Waveform copied unchanged to every antenna.
    Identity,
}

/// Which failures count as a block error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlerDefinition {
    /// Data is lost when either the control or the data CRC fails.
    ControlOrData,
    /// Data decoded with the transmitted control assumed known.
    DataOnly,
}

impl BlerDefinition {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlerDefinition::ControlOrData => "control_or_data",
            BlerDefinition::DataOnly => "data_only",
        }
    }
}

/// Signal power the SNR is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// Mean power of the transmitted subframe waveform (all samples, cyclic prefixes included),
    /// i.e. average received power per antenna through the unit-energy channel.
    Waveform,
    /// Power of one occupied resource element (unity).
    ResourceElement,
    /// Resource-element power with the noise split across the receive array: each branch gets
    /// variance `1 / (n_rx * snr)`.
    ResourceElementArray,
}

impl SnrReference {
    pub fn describe(&self) -> &'static str {
        match self {
            SnrReference::Waveform => "mean received waveform power per antenna over noise power per sample",
            SnrReference::ResourceElement => "occupied resource-element power over per-subcarrier noise power",
            SnrReference::ResourceElementArray => {
                "occupied resource-element power over per-subcarrier noise power summed across receive antennas"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub phy: PhyConfig,
    pub carrier_hz: f64,
    pub n_rx: usize,
    pub sinusoids: usize,
    pub channel: ChannelModel,
    pub group_destination_id: u32,
    /// Carrier offset applied by the channel; the receiver removes it as a known value.
    pub frequency_offset_hz: f64,
    pub bler_definition: BlerDefinition,
    pub snr_reference: SnrReference,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            phy: PhyConfig::default(),
            carrier_hz: 5.9e9,
            n_rx: 2,
            sinusoids: 32,
            channel: ChannelModel::Eva,
            group_destination_id: 510,
            frequency_offset_hz: 0.0,
            bler_definition: BlerDefinition::ControlOrData,
            snr_reference: SnrReference::ResourceElementArray,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        self.phy.validate()?;
        if self.n_rx == 0 || self.sinusoids == 0 {
            return Err(Error::Config("n_rx and sinusoids must be positive".into()));
        }
        if !(self.carrier_hz > 0.0) || !self.frequency_offset_hz.is_finite() {
            return Err(Error::Config("carrier must be positive and offset finite".into()));
        }
        if self.group_destination_id >= 512 {
            return Err(Error::Config("group_destination_id must fit in 9 bits".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubframeOutcome {
    pub control_ok: bool,
    pub data_ok: bool,
    pub cyclic_shift: u32,
    pub detected_shift: Option<u32>,
}

impl SubframeOutcome {
    /// Error verdict under `def`.
    pub fn is_error(&self, def: BlerDefinition) -> bool {
        match def {
            BlerDefinition::ControlOrData => !(self.control_ok && self.data_ok),
            BlerDefinition::DataOnly => !self.data_ok,
        }
    }
}

/// Everything needed to push subframes through the chain; shareable across threads.
#[derive(Debug, Clone)]
pub struct LinkSim {
    pub config: LinkConfig,
    pub phy: Phy,
}

fn rotate(samples: &mut [Complex64], offset_hz: f64, fs: f64) {
    if offset_hz == 0.0 {
        return;
    }
    let w = 2.0 * std::f64::consts::PI * offset_hz / fs;
    for (n, s) in samples.iter_mut().enumerate() {
        *s *= Complex64::from_polar(1.0, w * n as f64);
    }
}

impl LinkSim {
    pub fn new(config: LinkConfig) -> Result<Self> {
        config.validate()?;
        let phy = Phy::new(config.phy.clone())?;
        Ok(Self { config, phy })
    }

    pub fn fading_config(&self, velocity_kmh: f64) -> FadingConfig {
        let fs = self.phy.pool().sample_rate_hz();
        let mut cfg = FadingConfig::eva(velocity_kmh, self.config.carrier_hz, fs);
        if self.config.channel == ChannelModel::Flat {
            cfg.profile = DelayProfile::flat();
        }
        cfg.n_rx = self.config.n_rx;
        cfg.sinusoids = self.config.sinusoids;
        cfg
    }

    /// Random transport block and cyclic shift for one subframe.
    pub fn random_payload(&self, rng: &mut impl RngCore) -> (Vec<u8>, u32) {
        let tb = (0..self.phy.tbs()).map(|_| (rng.next_u32() & 1) as u8).collect();
        let cs = CYCLIC_SHIFTS[rng.random_range(0..CYCLIC_SHIFTS.len())];
        (tb, cs)
    }

    pub fn sci(&self) -> SciMessage {
        self.phy.default_sci(self.config.group_destination_id)
    }

    /// Passes `tx` through the channel; returns per-antenna received grids and the noise
    /// variance per resource element.
    pub fn channel(
        &self,
        tx: &Waveform,
        snr_db: f64,
        velocity_kmh: f64,
        seed: u64,
    ) -> Result<(Vec<ResourceGrid>, f64)> {
        let pool = self.phy.pool();
        let fs = pool.sample_rate_hz();
        let mut shifted = tx.clone();
        rotate(&mut shifted.samples, self.config.frequency_offset_hz, fs);
        let mut branches = match self.config.channel {
            ChannelModel::Identity => vec![shifted; self.config.n_rx],
            _ => {
                let fading =
                    FadingRealization::new(&self.fading_config(velocity_kmh), derive_seed(seed, &[2]))?;
                fading.apply(&shifted)
            }
        };
        let p_ref = match self.config.snr_reference {
            SnrReference::Waveform => tx.mean_power(),
            SnrReference::ResourceElement => 1.0,
            SnrReference::ResourceElementArray => 1.0 / self.config.n_rx as f64,
        };
        let mut noise_rng = stream(seed, &[3]);
        let mut noise_var = 0.0;
        let mut grids = Vec::with_capacity(branches.len());
        for b in branches.iter_mut() {
            noise_var = add_awgn(&mut b.samples, snr_db, p_ref, &mut noise_rng)?;
            rotate(&mut b.samples, -self.config.frequency_offset_hz, fs);
            grids.push(scfdma_demodulate(&b.samples, pool, self.phy.plans())?);
        }
        Ok((grids, noise_var))
    }

    /// Runs one independent subframe whose randomness is entirely determined by `seed`.
    pub fn run_subframe(&self, snr_db: f64, velocity_kmh: f64, seed: u64) -> Result<SubframeOutcome> {
        let mut rng = stream(seed, &[1]);
        let (tb, cs) = self.random_payload(&mut rng);
        self.run_subframe_with(snr_db, velocity_kmh, seed, &tb, cs)
    }

    /// Like [`LinkSim::run_subframe`] with a caller-chosen transport block and cyclic shift.
    pub fn run_subframe_with(
        &self,
        snr_db: f64,
        velocity_kmh: f64,
        seed: u64,
        tb: &[u8],
        cs: u32,
    ) -> Result<SubframeOutcome> {
        let sci = self.sci();
        let grid = self.phy.build_tx_grid(&sci, tb, cs)?;
        let wave = scfdma_modulate(&grid, self.phy.pool(), self.phy.plans())?;
        let (rx, noise_var) = self.channel(&wave, snr_db, velocity_kmh, seed)?;
        let detection = self.phy.blind_decode_pscch(&rx, noise_var)?;
        // A control CRC pass with foreign content is a false alarm: treat it as a miss.
        let control_ok = detection.is_some_and(|d| d.sci == sci && d.cyclic_shift == cs);
        let data_ok = match (self.config.bler_definition, detection) {
            (BlerDefinition::DataOnly, _) => self.data_ok(&rx, &sci, cs, noise_var, tb)?,
            (BlerDefinition::ControlOrData, Some(d)) if control_ok => {
                self.data_ok(&rx, &d.sci, d.cyclic_shift, noise_var, tb)?
            }
            _ => false,
        };
        Ok(SubframeOutcome {
            control_ok,
            data_ok,
            cyclic_shift: cs,
            detected_shift: detection.map(|d| d.cyclic_shift),
        })
    }

    fn data_ok(&self, rx: &[ResourceGrid], sci: &SciMessage, cs: u32, nv: f64, tb: &[u8]) -> Result<bool> {
        let out = self.phy.decode_pssch(rx, sci, cs, nv)?;
        Ok(out.crc_ok && out.bits == tb)
    }
}
