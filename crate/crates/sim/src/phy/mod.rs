//! Symbol-level sidelink processing: the transmit chain from SCI and transport block to a
//! subframe grid, and the receive chain from faded grids back to verdicts.

pub mod chest;
pub mod dft;
pub mod dmrs;
pub mod grid;
pub mod pool;
pub mod qpsk;
pub mod sci;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use sidelink_core::coding::{
    channel_deinterleave, channel_interleave, conv_decode, conv_encode, conv_rate_match, conv_rate_recover,
    crc_attach, crc_check, descramble_llrs, desegment, scramble, segment_code_blocks, turbo_encode,
    turbo_rate_match, turbo_rate_recover, CrcKind, Segmentation, TurboDecoder,
};
use sidelink_core::fading::mrc_combine;
use sidelink_core::Complex64;

use crate::error::{Error, Result};
use chest::{estimate_channel, spline_weights, ChestConfig};
use dft::Plans;
use dmrs::{generate_dmrs, CYCLIC_SHIFTS};
use grid::{Occupancy, ResourceGrid};
use pool::{ResourcePool, BITS_PER_SYMBOL, DMRS_SYMBOLS, SCI_BITS};
use sci::SciMessage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhyConfig {
    pub pool: ResourcePool,
    pub chest: ChestConfig,
    /// Full turbo iterations (two half-iterations each).
    pub turbo_iterations: usize,
    pub pscch_scrambling_init: u32,
    pub pscch_dmrs_root: usize,
    pub pssch_dmrs_root: usize,
}

impl Default for PhyConfig {
    fn default() -> Self {
        Self {
            pool: ResourcePool::default(),
            chest: ChestConfig::default(),
            turbo_iterations: 4,
            pscch_scrambling_init: 510,
            pscch_dmrs_root: 1,
            pssch_dmrs_root: 2,
        }
    }
}

impl PhyConfig {
    pub fn validate(&self) -> Result<()> {
        self.pool.validate()?;
        self.chest.validate()?;
        if self.turbo_iterations == 0 {
            return Err(Error::Config("turbo_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// What the blind control search found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PscchDetection {
    pub sci: SciMessage,
    pub cyclic_shift: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsschDecode {
    /// Transport block without CRC.
    pub bits: Vec<u8>,
    pub crc_ok: bool,
    pub iterations: usize,
}

/// Immutable per-configuration state: plans, reference signals, sizes and the turbo decoder.
#[derive(Debug, Clone)]
pub struct Phy {
    pub config: PhyConfig,
    plans: Plans,
    data_symbols: Vec<usize>,
    time_weights: Vec<Vec<f64>>,
    pscch_dmrs: Vec<Vec<Complex64>>,
    pssch_dmrs: Vec<Vec<Complex64>>,
    segmentation: Segmentation,
    decoders: Vec<TurboDecoder>,
    tbs: usize,
}

fn shift_index(cs: u32) -> Result<usize> {
    CYCLIC_SHIFTS
        .iter()
        .position(|&c| c == cs)
        .ok_or_else(|| Error::Config(format!("cyclic shift {cs} not in {CYCLIC_SHIFTS:?}")))
}

/// Rate-matched length of each code block for `g` coded bits.
fn block_lengths(g: usize, c: usize) -> Vec<usize> {
    let gp = g / BITS_PER_SYMBOL;
    let gamma = gp % c;
    (0..c)
        .map(|r| if r < c - gamma { BITS_PER_SYMBOL * (gp / c) } else { BITS_PER_SYMBOL * gp.div_ceil(c) })
        .collect()
}

impl Phy {
    pub fn new(config: PhyConfig) -> Result<Self> {
        config.validate()?;
        let pool = &config.pool;
        let m_c = pool.pscch_subcarriers().len();
        let m_s = pool.pssch_subcarriers().len();
        let plans = Plans::new(&[pool.fft_size, m_c, m_s]);
        let (_, tbs) = pool.transport_block()?;
        let segmentation = Segmentation::for_length(tbs + 24)?;
        let decoders = (0..segmentation.n_blocks)
            .map(|r| {
                let d = TurboDecoder::new(segmentation.block_size(r), config.turbo_iterations)?;
                Ok(if r == 0 { d.with_filler(segmentation.filler) } else { d })
            })
            .collect::<Result<Vec<_>>>()?;
        let dmrs = |m: usize, root: usize| -> Result<Vec<Vec<Complex64>>> {
            CYCLIC_SHIFTS.iter().map(|&cs| generate_dmrs(m, root, cs)).collect()
        };
        Ok(Self {
            plans,
            data_symbols: pool.data_symbols(),
            time_weights: spline_weights(&DMRS_SYMBOLS, pool.symbols_per_subframe),
            pscch_dmrs: dmrs(m_c, config.pscch_dmrs_root)?,
            pssch_dmrs: dmrs(m_s, config.pssch_dmrs_root)?,
            segmentation,
            decoders,
            tbs,
            config,
        })
    }

    pub fn pool(&self) -> &ResourcePool {
        &self.config.pool
    }

    pub fn plans(&self) -> &Plans {
        &self.plans
    }

    /// Transport-block size in bits (CRC excluded).
    pub fn tbs(&self) -> usize {
        self.tbs
    }

    /// SCI the transmitter sends for the configured allocation.
    pub fn default_sci(&self, group_destination_id: u32) -> SciMessage {
        SciMessage {
            resource_indication: self.pool().subchannel as u32,
            group_destination_id,
            ..SciMessage::default()
        }
    }

    pub fn dmrs(&self, pscch: bool, cyclic_shift: u32) -> Result<&[Complex64]> {
        let i = shift_index(cyclic_shift)?;
        Ok(if pscch { &self.pscch_dmrs[i] } else { &self.pssch_dmrs[i] })
    }

    /// CRC16, tail-biting convolutional code, rate matching, interleaving and scrambling.
    pub fn encode_sci(&self, sci: &SciMessage) -> Result<Vec<u8>> {
        let with_crc = crc_attach(&sci.to_bits()?, CrcKind::Crc16);
        let cw = conv_encode(&with_crc)?;
        let e = self.pool().pscch_coded_bits();
        let rm = conv_rate_match(&cw, e)?;
        let il = channel_interleave(&rm, self.data_symbols.len(), BITS_PER_SYMBOL)?;
        Ok(scramble(&il, self.config.pscch_scrambling_init))
    }

    /// CRC24A, segmentation, turbo coding, rate matching, interleaving and scrambling.
    pub fn encode_tb(&self, tb: &[u8], scrambling_init: u32) -> Result<Vec<u8>> {
        if tb.len() != self.tbs {
            return Err(Error::Config(format!(
                "transport block has {} bits, allocation carries {}",
                tb.len(),
                self.tbs
            )));
        }
        let with_crc = crc_attach(tb, CrcKind::Crc24A);
        let (seg, blocks) = segment_code_blocks(&with_crc)?;
        let g = self.pool().pssch_coded_bits();
        let mut coded = Vec::with_capacity(g);
        for (block, e) in blocks.iter().zip(block_lengths(g, seg.n_blocks)) {
            coded.extend(turbo_rate_match(&turbo_encode(block)?, e, 0)?);
        }
        let il = channel_interleave(&coded, self.data_symbols.len(), BITS_PER_SYMBOL)?;
        Ok(scramble(&il, scrambling_init))
    }

    fn map_channel(
        &self,
        grid: &mut ResourceGrid,
        bits: &[u8],
        subcarriers: Range<usize>,
        dmrs: &[Complex64],
        tag: Occupancy,
    ) -> Result<()> {
        let m = subcarriers.len();
        let symbols = qpsk::qpsk_map(bits)?;
        let spread = self.plans.transform_precode(&symbols, m)?;
        if spread.len() != m * self.data_symbols.len() {
            return Err(Error::Invariant("coded length does not fill the allocation".into()));
        }
        for (chunk, &l) in spread.chunks_exact(m).zip(&self.data_symbols) {
            for (k, &v) in subcarriers.clone().zip(chunk) {
                grid.set(k, l, v, tag);
            }
        }
        for &l in &DMRS_SYMBOLS {
            for (k, &v) in subcarriers.clone().zip(dmrs) {
                grid.set(k, l, v, Occupancy::Dmrs);
            }
        }
        Ok(())
    }

    /// Places control and data with their reference signals on an otherwise empty grid.
    pub fn build_tx_grid(&self, sci: &SciMessage, tb: &[u8], cyclic_shift: u32) -> Result<ResourceGrid> {
        let pool = self.pool();
        if sci.resource_indication as usize >= pool.n_subchannels() {
            return Err(Error::Config("SCI points outside the pool".into()));
        }
        let mut grid = ResourceGrid::for_pool(pool);
        let sc = sci.resource_indication as usize;
        let control = self.encode_sci(sci)?;
        self.map_channel(
            &mut grid,
            &control,
            pool.pscch_subcarriers_in(sc),
            self.dmrs(true, cyclic_shift)?,
            Occupancy::Pscch,
        )?;
        let data = self.encode_tb(tb, sci.group_destination_id)?;
        self.map_channel(
            &mut grid,
            &data,
            pool.pssch_subcarriers_in(sc),
            self.dmrs(false, cyclic_shift)?,
            Occupancy::Pssch,
        )?;
        Ok(grid)
    }

    /// Channel estimation, MRC, DFT despreading and soft demapping of one allocation.
    fn demodulate_allocation(
        &self,
        rx: &[ResourceGrid],
        subcarriers: Range<usize>,
        dmrs: &[Complex64],
        noise_var: f64,
    ) -> Result<Vec<f64>> {
        if rx.is_empty() {
            return Err(Error::Config("no receive branches".into()));
        }
        let m = subcarriers.len();
        let estimates = rx
            .iter()
            .map(|g| estimate_channel(g, subcarriers.clone(), dmrs, &self.time_weights, &self.config.chest))
            .collect::<Result<Vec<_>>>()?;
        let mut llrs = Vec::with_capacity(m * self.data_symbols.len() * BITS_PER_SYMBOL);
        let mut ys: Vec<Vec<Complex64>> = vec![Vec::with_capacity(m); rx.len()];
        for &l in &self.data_symbols {
            for (y, g) in ys.iter_mut().zip(rx) {
                y.clear();
                y.extend_from_slice(&g.symbol(l)[subcarriers.clone()]);
            }
            let y_refs: Vec<&[Complex64]> = ys.iter().map(Vec::as_slice).collect();
            let h_refs: Vec<&[Complex64]> = estimates.iter().map(|h| &h[l * m..(l + 1) * m]).collect();
            let combined = mrc_combine(&y_refs, &h_refs, noise_var)?;
            let mut values: Vec<Complex64> = combined.iter().map(|c| c.value).collect();
            let nv = combined.iter().map(|c| c.noise_var).sum::<f64>() / m as f64;
            self.plans.inverse(&mut values)?;
            llrs.extend(qpsk::qpsk_soft_demap(&values, &vec![nv.max(1e-30); m])?);
        }
        Ok(llrs)
    }

    /// Control decoding at one cyclic-shift hypothesis.
    pub fn decode_pscch_at(
        &self,
        rx: &[ResourceGrid],
        subchannel: usize,
        cyclic_shift: u32,
        noise_var: f64,
    ) -> Result<Option<SciMessage>> {
        let llrs = self.demodulate_allocation(
            rx,
            self.pool().pscch_subcarriers_in(subchannel),
            self.dmrs(true, cyclic_shift)?,
            noise_var,
        )?;
        let d = descramble_llrs(&llrs, self.config.pscch_scrambling_init);
        let di = channel_deinterleave(&d, self.data_symbols.len(), BITS_PER_SYMBOL)?;
        let info_len = SCI_BITS + CrcKind::Crc16.len();
        let soft = conv_rate_recover(&di, info_len)?;
        let bits = conv_decode(&soft, info_len)?;
        if crc_check(&bits, CrcKind::Crc16)? {
            Ok(Some(SciMessage::from_bits(&bits[..SCI_BITS])?))
        } else {
            Ok(None)
        }
    }

    /// Tries every cyclic shift on the configured subchannel; the first CRC pass wins.
    pub fn blind_decode_pscch(&self, rx: &[ResourceGrid], noise_var: f64) -> Result<Option<PscchDetection>> {
        for &cs in &CYCLIC_SHIFTS {
            if let Some(sci) = self.decode_pscch_at(rx, self.pool().subchannel, cs, noise_var)? {
                return Ok(Some(PscchDetection { sci, cyclic_shift: cs }));
            }
        }
        Ok(None)
    }

    /// Data decoding on the allocation announced by `sci`.
    pub fn decode_pssch(
        &self,
        rx: &[ResourceGrid],
        sci: &SciMessage,
        cyclic_shift: u32,
        noise_var: f64,
    ) -> Result<PsschDecode> {
        let pool = self.pool();
        let sc = sci.resource_indication as usize;
        if sc >= pool.n_subchannels() {
            return Err(Error::Config(format!(
                "SCI allocation {sc} outside a pool of {} subchannels",
                pool.n_subchannels()
            )));
        }
        let llrs = self.demodulate_allocation(
            rx,
            pool.pssch_subcarriers_in(sc),
            self.dmrs(false, cyclic_shift)?,
            noise_var,
        )?;
        let d = descramble_llrs(&llrs, sci.group_destination_id);
        let di = channel_deinterleave(&d, self.data_symbols.len(), BITS_PER_SYMBOL)?;
        let seg = &self.segmentation;
        let multi = seg.has_block_crc();
        let mut blocks = Vec::with_capacity(seg.n_blocks);
        let mut pos = 0;
        let mut iterations = 0;
        let mut blocks_ok = true;
        for (r, e) in block_lengths(di.len(), seg.n_blocks).into_iter().enumerate() {
            let k = seg.block_size(r);
            let soft = turbo_rate_recover(&di[pos..pos + e], k, 0)?;
            pos += e;
            let crc = if multi { CrcKind::Crc24B } else { CrcKind::Crc24A };
            let out = self.decoders[r].decode(&soft, Some(crc))?;
            iterations = iterations.max(out.iterations);
            blocks_ok &= out.crc_ok == Some(true);
            blocks.push(out.bits);
        }
        let tb = desegment(seg, &blocks)?;
        let crc_ok = if multi { blocks_ok && crc_check(&tb, CrcKind::Crc24A)? } else { blocks_ok };
        Ok(PsschDecode { bits: tb[..self.tbs].to_vec(), crc_ok, iterations })
    }
}
