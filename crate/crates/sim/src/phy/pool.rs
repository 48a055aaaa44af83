//! Sidelink resource pool geometry and the sizes derived from it.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use sidelink_core::coding::turbo::block_sizes;

use crate::error::{Error, Result};

pub const DMRS_SYMBOLS: [usize; 4] = [2, 5, 8, 11];
pub const SUBCARRIERS_PER_PRB: usize = 12;
/// QPSK.
pub const BITS_PER_SYMBOL: usize = 2;
/// SCI payload bits before CRC.
pub const SCI_BITS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjacency {
    /// Control PRBs sit at the start of their subchannel, data follows immediately.
    Adjacent,
    /// Control PRBs of all subchannels form a separate region at the bottom of the band.
    NonAdjacent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePool {
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub n_prb: usize,
    pub sci_prbs: usize,
    /// PRBs per subchannel, control included.
    pub subchannel_size_prbs: usize,
    pub symbols_per_subframe: usize,
    pub adjacency: Adjacency,
    /// Leave the last symbol empty.
    pub guard_symbol: bool,
    pub fft_size: usize,
    /// Subchannel carrying the evaluated transmission.
    pub subchannel: usize,
}

impl Default for ResourcePool {
    fn default() -> Self {
        Self {
            bandwidth_hz: 10e6,
            subcarrier_spacing_hz: 15e3,
            n_prb: 48,
            sci_prbs: 2,
            subchannel_size_prbs: 16,
            symbols_per_subframe: 14,
            adjacency: Adjacency::Adjacent,
            guard_symbol: true,
            fft_size: 1024,
            subchannel: 0,
        }
    }
}

impl ResourcePool {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.sci_prbs != 2 {
            return bad("sci_prbs must be 2");
        }
        if self.symbols_per_subframe != 14 {
            return bad("only 14-symbol subframes (normal cyclic prefix) are supported");
        }
        if self.n_prb == 0 || self.n_subcarriers() > self.fft_size {
            return bad("occupied subcarriers exceed the FFT size");
        }
        if self.fft_size < 128 || !self.fft_size.is_multiple_of(128) {
            return bad("fft_size must be a positive multiple of 128");
        }
        if self.subchannel_size_prbs <= self.sci_prbs {
            return bad("a subchannel must be larger than the control allocation");
        }
        if !self.n_prb.is_multiple_of(self.subchannel_size_prbs) {
            return bad("subchannel_size_prbs must divide n_prb");
        }
        if self.subchannel >= self.n_subchannels() {
            return bad("subchannel index outside the pool");
        }
        if !(self.bandwidth_hz > 0.0 && self.subcarrier_spacing_hz > 0.0) {
            return bad("bandwidth and subcarrier spacing must be positive");
        }
        Ok(())
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_prb * SUBCARRIERS_PER_PRB
    }

    pub fn n_subchannels(&self) -> usize {
        self.n_prb / self.subchannel_size_prbs
    }

    pub fn pssch_prbs(&self) -> usize {
        self.subchannel_size_prbs - self.sci_prbs
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.fft_size as f64 * self.subcarrier_spacing_hz
    }

    /// Cyclic-prefix length of symbol `l`.
    pub fn cp_len(&self, l: usize) -> usize {
        if l.is_multiple_of(7) {
            self.fft_size * 160 / 2048
        } else {
            self.fft_size * 144 / 2048
        }
    }

    pub fn samples_per_subframe(&self) -> usize {
        (0..self.symbols_per_subframe).map(|l| self.cp_len(l) + self.fft_size).sum()
    }

    /// Symbols carrying control or data, in time order.
    pub fn data_symbols(&self) -> Vec<usize> {
        let last = if self.guard_symbol { self.symbols_per_subframe - 1 } else { self.symbols_per_subframe };
        (0..last).filter(|l| !DMRS_SYMBOLS.contains(l)).collect()
    }

    fn prb_range(start: usize, len: usize) -> Range<usize> {
        start * SUBCARRIERS_PER_PRB..(start + len) * SUBCARRIERS_PER_PRB
    }

    pub fn pscch_subcarriers_in(&self, subchannel: usize) -> Range<usize> {
        let start = match self.adjacency {
            Adjacency::Adjacent => subchannel * self.subchannel_size_prbs,
            Adjacency::NonAdjacent => subchannel * self.sci_prbs,
        };
        Self::prb_range(start, self.sci_prbs)
    }

    pub fn pssch_subcarriers_in(&self, subchannel: usize) -> Range<usize> {
        let start = match self.adjacency {
            Adjacency::Adjacent => subchannel * self.subchannel_size_prbs + self.sci_prbs,
            Adjacency::NonAdjacent => self.n_subchannels() * self.sci_prbs + subchannel * self.pssch_prbs(),
        };
        Self::prb_range(start, self.pssch_prbs())
    }

    pub fn pscch_subcarriers(&self) -> Range<usize> {
        self.pscch_subcarriers_in(self.subchannel)
    }

    pub fn pssch_subcarriers(&self) -> Range<usize> {
        self.pssch_subcarriers_in(self.subchannel)
    }

    pub fn pscch_coded_bits(&self) -> usize {
        self.sci_prbs * SUBCARRIERS_PER_PRB * self.data_symbols().len() * BITS_PER_SYMBOL
    }

    pub fn pssch_coded_bits(&self) -> usize {
        self.pssch_prbs() * SUBCARRIERS_PER_PRB * self.data_symbols().len() * BITS_PER_SYMBOL
    }

    /// Turbo block size and transport-block size (block minus CRC24A) for a rate near 1/3:
    /// the largest block whose payload does not exceed a third of the coded bits.
    pub fn transport_block(&self) -> Result<(usize, usize)> {
        let limit = self.pssch_coded_bits() / 3;
        block_sizes()
            .filter(|&k| k - 24 <= limit)
            .last()
            .map(|k| (k, k - 24))
            .ok_or_else(|| Error::Config("allocation too small for a turbo block".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sizes() {
        let p = ResourcePool::default();
        p.validate().unwrap();
        assert_eq!(p.samples_per_subframe(), 15_360);
        assert_eq!(p.sample_rate_hz(), 15.36e6);
        assert_eq!(p.data_symbols(), [0, 1, 3, 4, 6, 7, 9, 10, 12]);
        assert_eq!(p.pscch_coded_bits(), 2 * 12 * 9 * 2);
        assert_eq!(p.pssch_coded_bits(), 14 * 12 * 9 * 2);
        assert_eq!(p.transport_block().unwrap(), (1024, 1000));
        let no_guard = ResourcePool { guard_symbol: false, ..p.clone() };
        assert_eq!(no_guard.data_symbols().len(), 10);
        assert_eq!(no_guard.pscch_coded_bits() / 2, 2 * 12 * 10);
    }

    #[test]
    fn layouts_tile_the_band() {
        for adjacency in [Adjacency::Adjacent, Adjacency::NonAdjacent] {
            let p = ResourcePool { adjacency, ..ResourcePool::default() };
            let mut used = vec![false; p.n_subcarriers()];
            for sc in 0..p.n_subchannels() {
                for k in p.pscch_subcarriers_in(sc).chain(p.pssch_subcarriers_in(sc)) {
                    assert!(!used[k]);
                    used[k] = true;
                }
            }
            assert!(used.iter().all(|&u| u));
        }
    }

    #[test]
    fn invalid_pools() {
        let p = ResourcePool::default();
        for bad in [
            ResourcePool { sci_prbs: 3, ..p.clone() },
            ResourcePool { subchannel_size_prbs: 10, ..p.clone() },
            ResourcePool { n_prb: 100, ..p.clone() },
            ResourcePool { subchannel: 3, ..p.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
