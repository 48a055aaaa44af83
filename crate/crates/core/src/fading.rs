//! Small-scale fading for the link-level tier: the EVA power-delay profile, sum-of-sinusoids
//! Rayleigh processes with a classical (Jakes) Doppler spectrum, additive white Gaussian noise and
//! maximal-ratio combining over the receive branches.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{invalid, Result};
use crate::math::db_to_linear;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Maximum Doppler shift `v f_c / c` for a speed in km/h.
pub fn doppler_frequency(velocity_kmh: f64, carrier_hz: f64) -> Result<f64> {
    if !(velocity_kmh >= 0.0) {
        return Err(invalid("velocity must be non-negative"));
    }
    Ok(velocity_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT)
}

/// Tapped-delay-line power-delay profile.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl DelayProfile {
    /// Extended Vehicular A.
    pub fn eva() -> Self {
        Self {
            delays_ns: alloc::vec![0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0],
            powers_db: alloc::vec![0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9],
        }
    }

    /// Single tap at zero delay.
    pub fn flat() -> Self {
        Self { delays_ns: alloc::vec![0.0], powers_db: alloc::vec![0.0] }
    }

    /// Linear tap powers scaled to unit sum.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.powers_db.iter().map(|&p| db_to_linear(p)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Tap delays rounded to the nearest sample period.
    pub fn delays_in_samples(&self, sample_rate_hz: f64) -> Vec<usize> {
        self.delays_ns.iter().map(|&d| libm::round(d * 1e-9 * sample_rate_hz) as usize).collect()
    }
}

/// Complex baseband samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl Waveform {
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// One unit-power Rayleigh process built from `N` equal-power complex sinusoids whose arrival
/// angles are evenly spaced with a random rotation.
#[derive(Debug, Clone)]
struct SumOfSinusoids {
    /// Angular Doppler frequency of each component (rad/s).
    omega: Vec<f64>,
    phase: Vec<f64>,
}

impl SumOfSinusoids {
    fn new(n: usize, doppler_hz: f64, rng: &mut impl RngCore) -> Self {
        let u = Uniform::new(-PI, PI).expect("finite range");
        let theta = u.sample(rng);
        let omega = (0..n)
            .map(|i| {
                let alpha = (2.0 * PI * i as f64 + theta) / n as f64;
                2.0 * PI * doppler_hz * libm::cos(alpha)
            })
            .collect();
        let phase = (0..n).map(|_| u.sample(rng)).collect();
        Self { omega, phase }
    }

    fn gain(&self, t: f64) -> Complex64 {
        let sum: Complex64 =
            self.omega.iter().zip(&self.phase).map(|(&w, &p)| Complex64::from_polar(1.0, w * t + p)).sum();
        sum / libm::sqrt(self.omega.len() as f64)
    }

    /// Gains at `t0 + i * dt` for `i in 0..count`, stepping each component by a fixed rotation.
    fn trajectory(&self, t0: f64, dt: f64, count: usize) -> Vec<Complex64> {
        let mut phasors: Vec<Complex64> = self
            .omega
            .iter()
            .zip(&self.phase)
            .map(|(&w, &p)| Complex64::from_polar(1.0, w * t0 + p))
            .collect();
        let steps: Vec<Complex64> = self.omega.iter().map(|&w| Complex64::from_polar(1.0, w * dt)).collect();
        let scale = 1.0 / libm::sqrt(self.omega.len() as f64);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(phasors.iter().sum::<Complex64>() * scale);
            for (p, s) in phasors.iter_mut().zip(&steps) {
                *p *= s;
            }
        }
        out
    }
}

/// Parameters of a fading channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingConfig {
    pub profile: DelayProfile,
    pub velocity_kmh: f64,
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    pub n_rx: usize,
    pub sinusoids: usize,
}

impl FadingConfig {
    pub fn eva(velocity_kmh: f64, carrier_hz: f64, sample_rate_hz: f64) -> Self {
        Self {
            profile: DelayProfile::eva(),
            velocity_kmh,
            carrier_hz,
            sample_rate_hz,
            n_rx: 2,
            sinusoids: 32,
        }
    }
}

/// A frozen draw of the time-varying multipath channel for every receive antenna.
///
/// Antenna branches are mutually independent. A realization is a pure function of its config and
/// seed; the random start time decorrelates consecutive draws.
#[derive(Debug, Clone)]
pub struct FadingRealization {
    pub doppler_hz: f64,
    pub velocity_kmh: f64,
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    pub seed: u64,
    delays: Vec<usize>,
    amplitudes: Vec<f64>,
    /// `[antenna][tap]`
    processes: Vec<Vec<SumOfSinusoids>>,
    start_time: f64,
}

impl FadingRealization {
    pub fn new(config: &FadingConfig, seed: u64) -> Result<Self> {
        if config.sample_rate_hz <= 0.0 || config.n_rx == 0 || config.sinusoids == 0 {
            return Err(invalid("fading needs a positive sample rate, antennas and sinusoids"));
        }
        if config.profile.delays_ns.len() != config.profile.powers_db.len()
            || config.profile.delays_ns.is_empty()
        {
            return Err(invalid("delay profile needs matching, non-empty delay and power lists"));
        }
        let doppler_hz = doppler_frequency(config.velocity_kmh, config.carrier_hz)?;
        let mut rng = crate::rng::stream(seed, &[0xFAD1]);
        let n_taps = config.profile.delays_ns.len();
        let processes = (0..config.n_rx)
            .map(|_| {
                (0..n_taps).map(|_| SumOfSinusoids::new(config.sinusoids, doppler_hz, &mut rng)).collect()
            })
            .collect();
        let start_time = Uniform::new(0.0, 10.0).expect("finite range").sample(&mut rng);
        Ok(Self {
            doppler_hz,
            velocity_kmh: config.velocity_kmh,
            carrier_hz: config.carrier_hz,
            sample_rate_hz: config.sample_rate_hz,
            seed,
            delays: config.profile.delays_in_samples(config.sample_rate_hz),
            amplitudes: config.profile.normalized_powers().into_iter().map(libm::sqrt).collect(),
            processes,
            start_time,
        })
    }

    pub fn n_rx(&self) -> usize {
        self.processes.len()
    }

    pub fn n_taps(&self) -> usize {
        self.delays.len()
    }

    pub fn tap_delays_samples(&self) -> &[usize] {
        &self.delays
    }

    /// Samples between exact gain evaluations.
    pub fn update_interval(&self) -> usize {
        if self.doppler_hz > 1_000.0 {
            1
        } else {
            16
        }
    }

    /// Complex gain of one tap at sample index `n` (tap power included).
    pub fn tap_gain(&self, antenna: usize, tap: usize, n: usize) -> Complex64 {
        let t = self.start_time + n as f64 / self.sample_rate_hz;
        self.processes[antenna][tap].gain(t) * self.amplitudes[tap]
    }

    /// Per-sample gains of every tap for one antenna over `len` samples.
    ///
    /// Exact values are computed every 16 samples. Between anchors the gain is linearly
    /// interpolated when the update interval is one sample, and held otherwise.
    pub fn tap_gains(&self, antenna: usize, len: usize) -> Vec<Vec<Complex64>> {
        const ANCHOR: usize = 16;
        let interpolate = self.update_interval() == 1;
        let anchors = len / ANCHOR + 2;
        let dt = ANCHOR as f64 / self.sample_rate_hz;
        self.processes[antenna]
            .iter()
            .zip(&self.amplitudes)
            .map(|(proc_, &amp)| {
                let a = proc_.trajectory(self.start_time, dt, anchors);
                (0..len)
                    .map(|n| {
                        let i = n / ANCHOR;
                        let g = if interpolate {
                            let frac = (n % ANCHOR) as f64 / ANCHOR as f64;
                            a[i] * (1.0 - frac) + a[i + 1] * frac
                        } else {
                            a[i]
                        };
                        g * amp
                    })
                    .collect()
            })
            .collect()
    }

    /// Time-varying FIR filtering of `wave` through every receive branch.
    pub fn apply(&self, wave: &Waveform) -> Vec<Waveform> {
        let x = &wave.samples;
        (0..self.n_rx())
            .map(|a| {
                let gains = self.tap_gains(a, x.len());
                let mut y = alloc::vec![Complex64::new(0.0, 0.0); x.len()];
                for (g, &d) in gains.iter().zip(&self.delays) {
                    for n in d..x.len() {
                        y[n] += g[n] * x[n - d];
                    }
                }
                Waveform { samples: y, sample_rate_hz: wave.sample_rate_hz }
            })
            .collect()
    }
}

/// Highest SNR treated as finite; larger requests are capped here.
pub const SNR_CAP_DB: f64 = 300.0;

/// Adds circularly-symmetric complex Gaussian noise of variance
/// `signal_power_ref / 10^(snr_db / 10)` in place. Returns the noise variance used.
pub fn add_awgn(
    samples: &mut [Complex64],
    snr_db: f64,
    signal_power_ref: f64,
    rng: &mut impl RngCore,
) -> Result<f64> {
    if !(signal_power_ref > 0.0) {
        return Err(invalid("signal power reference must be positive"));
    }
    let variance = signal_power_ref / db_to_linear(snr_db.min(SNR_CAP_DB));
    let sigma = libm::sqrt(variance / 2.0);
    for s in samples.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *s += Complex64::new(re * sigma, im * sigma);
    }
    Ok(variance)
}

/// Combined value and post-combining noise variance of one resource element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Combined {
    pub value: Complex64,
    pub noise_var: f64,
    /// Total branch gain fell below the regularization floor.
    pub low_confidence: bool,
}

/// Channel power below which a resource element is treated as unusable.
pub const GAIN_FLOOR: f64 = 1e-12;

/// Maximal-ratio combination `sum(conj(h) y) / sum(|h|^2)` of matching cell sets.
///
/// `rx[b][i]` and `h[b][i]` are branch `b`, cell `i`. With per-branch noise variance `noise_var`
/// the combined noise variance is `noise_var / sum(|h|^2)`.
pub fn mrc_combine(rx: &[&[Complex64]], h: &[&[Complex64]], noise_var: f64) -> Result<Vec<Combined>> {
    if rx.is_empty() || rx.len() != h.len() {
        return Err(invalid("need one channel estimate per receive branch"));
    }
    let n = rx[0].len();
    if rx.iter().chain(h.iter()).any(|b| b.len() != n) {
        return Err(invalid("branch dimensions differ"));
    }
    Ok((0..n)
        .map(|i| {
            let (num, den) = rx.iter().zip(h).fold((Complex64::new(0.0, 0.0), 0.0), |(num, den), (y, hh)| {
                (num + hh[i].conj() * y[i], den + hh[i].norm_sqr())
            });
            if den < GAIN_FLOOR {
                Combined { value: num / GAIN_FLOOR, noise_var: noise_var / GAIN_FLOOR, low_confidence: true }
            } else {
                Combined { value: num / den, noise_var: noise_var / den, low_confidence: false }
            }
        })
        .collect())
}
