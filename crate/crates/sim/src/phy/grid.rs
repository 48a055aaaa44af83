//! Subframe resource grid and SC-FDMA (de)modulation.

use serde::{Deserialize, Serialize};
use sidelink_core::fading::Waveform;
use sidelink_core::Complex64;

use crate::error::{Error, Result};
use crate::phy::dft::Plans;
use crate::phy::pool::ResourcePool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Occupancy {
    Empty,
    Pscch,
    Pssch,
    Dmrs,
}

/// Cells are stored symbol-major: `cells[l * n_subcarriers + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub cells: Vec<Complex64>,
    pub occupancy: Vec<Occupancy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Census {
    pub pscch: usize,
    pub pssch: usize,
    pub dmrs: usize,
    pub empty: usize,
}

impl ResourceGrid {
    pub fn new(n_subcarriers: usize, n_symbols: usize) -> Self {
        Self {
            n_subcarriers,
            n_symbols,
            cells: vec![Complex64::new(0.0, 0.0); n_subcarriers * n_symbols],
            occupancy: vec![Occupancy::Empty; n_subcarriers * n_symbols],
        }
    }

    pub fn for_pool(pool: &ResourcePool) -> Self {
        Self::new(pool.n_subcarriers(), pool.symbols_per_subframe)
    }

    #[inline]
    pub fn index(&self, k: usize, l: usize) -> usize {
        l * self.n_subcarriers + k
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.cells[self.index(k, l)]
    }

    pub fn set(&mut self, k: usize, l: usize, v: Complex64, tag: Occupancy) {
        let i = self.index(k, l);
        self.cells[i] = v;
        self.occupancy[i] = tag;
    }

    pub fn symbol(&self, l: usize) -> &[Complex64] {
        &self.cells[l * self.n_subcarriers..(l + 1) * self.n_subcarriers]
    }

    pub fn census(&self) -> Census {
        let mut c = Census::default();
        for o in &self.occupancy {
            match o {
                Occupancy::Pscch => c.pscch += 1,
                Occupancy::Pssch => c.pssch += 1,
                Occupancy::Dmrs => c.dmrs += 1,
                Occupancy::Empty => c.empty += 1,
            }
        }
        c
    }

    /// Mean power over occupied cells.
    pub fn occupied_power(&self) -> f64 {
        let (sum, n) = self
            .cells
            .iter()
            .zip(&self.occupancy)
            .filter(|(_, o)| **o != Occupancy::Empty)
            .fold((0.0, 0usize), |(s, n), (c, _)| (s + c.norm_sqr(), n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

fn bin(pool: &ResourcePool, k: usize) -> usize {
    (k + pool.fft_size - pool.n_subcarriers() / 2) % pool.fft_size
}

/// Unitary IFFT per symbol with cyclic prefix; subcarrier `k` sits `k - n_sc/2` bins from DC.
pub fn scfdma_modulate(grid: &ResourceGrid, pool: &ResourcePool, plans: &Plans) -> Result<Waveform> {
    if grid.n_subcarriers != pool.n_subcarriers() || grid.n_symbols != pool.symbols_per_subframe {
        return Err(Error::Config("grid does not match the pool".into()));
    }
    let n = pool.fft_size;
    let mut samples = Vec::with_capacity(pool.samples_per_subframe());
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for l in 0..grid.n_symbols {
        buf.fill(Complex64::new(0.0, 0.0));
        for (k, &v) in grid.symbol(l).iter().enumerate() {
            buf[bin(pool, k)] = v;
        }
        plans.inverse(&mut buf)?;
        let cp = pool.cp_len(l);
        samples.extend_from_slice(&buf[n - cp..]);
        samples.extend_from_slice(&buf);
    }
    Ok(Waveform { samples, sample_rate_hz: pool.sample_rate_hz() })
}

/// Inverse of [`scfdma_modulate`]; occupancy of the result is left empty.
pub fn scfdma_demodulate(wave: &[Complex64], pool: &ResourcePool, plans: &Plans) -> Result<ResourceGrid> {
    if wave.len() != pool.samples_per_subframe() {
        return Err(Error::Config(format!(
            "waveform has {} samples, expected {}",
            wave.len(),
            pool.samples_per_subframe()
        )));
    }
    let n = pool.fft_size;
    let mut grid = ResourceGrid::for_pool(pool);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut pos = 0;
    for l in 0..pool.symbols_per_subframe {
        pos += pool.cp_len(l);
        buf.copy_from_slice(&wave[pos..pos + n]);
        pos += n;
        plans.forward(&mut buf)?;
        let row = l * grid.n_subcarriers;
        for k in 0..grid.n_subcarriers {
            grid.cells[row + k] = buf[bin(pool, k)];
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn setup() -> (ResourcePool, Plans) {
        let pool = ResourcePool::default();
        let plans = Plans::new(&[pool.fft_size]);
        (pool, plans)
    }

    #[test]
    fn round_trip_and_length() {
        let (pool, plans) = setup();
        let mut g = ResourceGrid::for_pool(&pool);
        let mut rng = sidelink_core::rng::stream(3, &[]);
        for v in g.cells.iter_mut() {
            *v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        let w = scfdma_modulate(&g, &pool, &plans).unwrap();
        assert_eq!(w.samples.len(), 15_360);
        let back = scfdma_demodulate(&w.samples, &pool, &plans).unwrap();
        let err = g.cells.iter().zip(&back.cells).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn single_subcarrier_is_a_tone() {
        let (pool, plans) = setup();
        let mut g = ResourceGrid::for_pool(&pool);
        let k = 300;
        g.set(k, 0, Complex64::new(1.0, 0.0), Occupancy::Pssch);
        let w = scfdma_modulate(&g, &pool, &plans).unwrap();
        let f = (k as f64 - 288.0) / 1024.0;
        let cp = pool.cp_len(0);
        let amp = 1.0 / 1024f64.sqrt();
        for n in 0..1024 + cp {
            let expected =
                Complex64::from_polar(amp, 2.0 * std::f64::consts::PI * f * (n as f64 - cp as f64));
            assert!((w.samples[n] - expected).norm() < 1e-12);
        }
        assert!(w.samples[1024 + cp..].iter().all(|s| s.norm() < 1e-15));
    }
}
