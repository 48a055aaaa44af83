//! System-level evaluation: capacity, resource reuse, SINR and the packet-reception procedure.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::l2s::L2sTable;
use crate::math::{db_to_linear, linear_to_db, sum_dbm};
use crate::rng;
use crate::scenario::{
    build_topology, link_uniform, noise_power_dbm, rx_power_dbm, shadow_fading_db, ScenarioConfig, Topology,
};

/// Spectral efficiency `P·UE·Period/BW` in bit/s/Hz.
pub fn spectral_efficiency(packet_bits: f64, n_ue: f64, period_hz: f64, bw_hz: f64) -> Result<f64> {
    if !(packet_bits > 0.0 && period_hz > 0.0 && bw_hz > 0.0 && n_ue >= 0.0) {
        return Err(invalid("spectral efficiency needs positive packet, period and bandwidth"));
    }
    Ok(packet_bits * n_ue * period_hz / bw_hz)
}

/// Number of UEs a spectral efficiency can carry: `floor(SE·BW/(P·Period))`.
pub fn ue_supported(se: f64, bw_hz: f64, packet_bits: f64, period_hz: f64) -> Result<u64> {
    if !(se > 0.0 && bw_hz > 0.0 && packet_bits > 0.0 && period_hz > 0.0) {
        return Err(invalid("supported-UE count needs positive inputs"));
    }
    let n = se * bw_hz / (packet_bits * period_hz);
    // Absorb rounding so that an exact inverse of `spectral_efficiency` lands on the integer.
    Ok(libm::floor(n * (1.0 + 1e-12)) as u64)
}

/// Spectral efficiency carried by a subframe grid: modulation bits times code rate, scaled by
/// the fraction of symbols and PRBs that carry data.
pub fn grid_spectral_efficiency(
    bits_per_symbol: f64,
    code_rate: f64,
    used_symbols: u32,
    total_symbols: u32,
    data_prbs: u32,
    total_prbs: u32,
) -> f64 {
    bits_per_symbol
        * code_rate
        * (f64::from(used_symbols) / f64::from(total_symbols))
        * (f64::from(data_prbs) / f64::from(total_prbs))
}

/// QPSK at rate 1/3 on the 48-PRB pool: one guard symbol out of 14, two PRBs for control.
pub fn default_spectral_efficiency() -> f64 {
    grid_spectral_efficiency(2.0, 1.0 / 3.0, 13, 14, 46, 48)
}

impl ScenarioConfig {
    pub fn effective_spectral_efficiency(&self) -> f64 {
        self.spectral_efficiency.unwrap_or_else(default_spectral_efficiency)
    }

    pub fn ue_supported(&self) -> Result<u64> {
        ue_supported(
            self.effective_spectral_efficiency(),
            self.bandwidth_hz,
            self.packet_bits() as f64,
            self.tx_period_hz,
        )
    }
}

/// Gives every vehicle one of `n_resources` resources. Vehicles are visited in order of x (then
/// y); each takes the resource whose nearest current user is farthest away, unused resources
/// first and ties to the lowest index.
pub fn assign_resources(topo: &Topology, n_resources: usize) -> Result<Vec<usize>> {
    if n_resources == 0 {
        return Err(invalid("no resources to assign"));
    }
    let mut order: Vec<usize> = (0..topo.vehicles.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (&topo.vehicles[a], &topo.vehicles[b]);
        va.x.total_cmp(&vb.x).then(va.y.total_cmp(&vb.y)).then(a.cmp(&b))
    });
    let mut users: Vec<Vec<usize>> = alloc::vec![Vec::new(); n_resources];
    let mut out = alloc::vec![0usize; topo.vehicles.len()];
    for v in order {
        let mut best = 0;
        let mut best_d = f64::NEG_INFINITY;
        for (r, list) in users.iter().enumerate() {
            let d = list.iter().map(|&u| topo.distance(u, v)).fold(f64::INFINITY, f64::min);
            if d > best_d {
                best_d = d;
                best = r;
            }
            if d == f64::INFINITY {
                break;
            }
        }
        users[best].push(v);
        out[v] = best;
    }
    Ok(out)
}

/// Smallest distance between two vehicles sharing a resource (infinite when nobody shares).
pub fn min_reuse_distance(topo: &Topology, assignment: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..assignment.len() {
        for b in a + 1..assignment.len() {
            if assignment[a] == assignment[b] {
                best = best.min(topo.distance(a, b));
            }
        }
    }
    best
}

/// SINR in dB from powers in dBm; `interference_dbm` may be negative infinity.
pub fn sinr_db(wanted_dbm: f64, interference_dbm: f64, noise_dbm: f64) -> f64 {
    let denom = db_to_linear(interference_dbm) + db_to_linear(noise_dbm);
    wanted_dbm - linear_to_db(denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub rx_id: usize,
    pub wanted_power_dbm: f64,
    /// Negative infinity when no co-channel transmitter is active.
    pub interference_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub sinr_db: f64,
}

impl LinkBudget {
    pub fn has_interference(&self) -> bool {
        self.interference_power_dbm > f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxRecord {
    pub rx_id: usize,
    pub sinr_db: f64,
    pub bler: f64,
    pub passed_threshold: bool,
    /// `None` when the threshold test already failed and no draw was made.
    pub random_test_pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrrResult {
    pub prr: f64,
    pub counter_success: u64,
    pub n_ue_in_range: u64,
    pub ue_supported: u64,
    /// The ratio product exceeded one and was clamped.
    pub clamped: bool,
    pub per_rx: Vec<RxRecord>,
    pub drop_seed: u64,
}

/// Packet-reception procedure for one transmitter: table lookup per receiver, threshold test,
/// random test against `draw(rx_id)`, then `min(1, counter/N · supported/N)`.
pub fn prr_procedure(
    receivers: &[(usize, f64)],
    table: &L2sTable,
    velocity_kmh: f64,
    threshold_bler: f64,
    ue_supported: u64,
    mut draw: impl FnMut(usize) -> f64,
) -> Result<PrrResult> {
    if receivers.is_empty() {
        return Err(invalid("no receivers in range: PRR undefined"));
    }
    let mut counter = 0u64;
    let mut per_rx = Vec::with_capacity(receivers.len());
    for &(rx_id, sinr) in receivers {
        let bler = table.lookup(sinr, velocity_kmh)?;
        let passed_threshold = bler < threshold_bler;
        let random_test_pass = if passed_threshold {
            let u = draw(rx_id);
            Some(bler < u)
        } else {
            None
        };
        if random_test_pass == Some(true) {
            counter += 1;
        }
        per_rx.push(RxRecord { rx_id, sinr_db: sinr, bler, passed_threshold, random_test_pass });
    }
    let n = receivers.len() as f64;
    let raw = (counter as f64 / n) * (ue_supported as f64 / n);
    Ok(PrrResult {
        prr: raw.min(1.0),
        counter_success: counter,
        n_ue_in_range: receivers.len() as u64,
        ue_supported,
        clamped: raw > 1.0,
        per_rx,
        drop_seed: 0,
    })
}

/// One static snapshot of the highway with its resource assignment.
#[derive(Debug, Clone)]
pub struct Drop {
    pub config: ScenarioConfig,
    pub topology: Topology,
    pub assignment: Vec<usize>,
    by_resource: Vec<Vec<usize>>,
    pub seed: u64,
    noise_dbm: f64,
}

impl Drop {
    pub fn new(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        let topology = build_topology(config, seed)?;
        Self::from_topology(config, topology, seed)
    }

    pub fn from_topology(config: &ScenarioConfig, topology: Topology, seed: u64) -> Result<Self> {
        config.validate()?;
        let n_res = config.resources();
        let assignment = assign_resources(&topology, n_res)?;
        let mut by_resource = alloc::vec![Vec::new(); n_res];
        for (v, &r) in assignment.iter().enumerate() {
            by_resource[r].push(v);
        }
        Ok(Self {
            config: config.clone(),
            topology,
            assignment,
            by_resource,
            seed,
            noise_dbm: noise_power_dbm(config),
        })
    }

    /// Received power of `tx` at `rx` including that link's shadowing.
    pub fn rx_power(&self, tx: usize, rx: usize) -> f64 {
        let shadow = shadow_fading_db(self.seed, tx, rx, self.config.shadow_sigma_db);
        rx_power_dbm(self.topology.distance(tx, rx), &self.config, shadow)
    }

    /// Transmitters other than `tx` (and `rx`) on `tx`'s resource.
    pub fn co_channel(&self, tx: usize, rx: usize) -> impl Iterator<Item = usize> + '_ {
        self.by_resource[self.assignment[tx]].iter().copied().filter(move |&o| o != tx && o != rx)
    }

    pub fn interference_power_dbm(&self, tx: usize, rx: usize) -> f64 {
        sum_dbm(self.co_channel(tx, rx).map(|i| self.rx_power(i, rx)))
    }

    pub fn link_budget(&self, tx: usize, rx: usize) -> LinkBudget {
        let wanted = self.rx_power(tx, rx);
        let interference = self.interference_power_dbm(tx, rx);
        LinkBudget {
            rx_id: rx,
            wanted_power_dbm: wanted,
            interference_power_dbm: interference,
            noise_power_dbm: self.noise_dbm,
            sinr_db: sinr_db(wanted, interference, self.noise_dbm),
        }
    }

    /// Runs the reception procedure for tagged transmitter `tx`; `None` if nobody is in range.
    pub fn prr_single(&self, tx: usize, table: &L2sTable, ue_supported: u64) -> Result<Option<PrrResult>> {
        let rxs = self.topology.neighbors_in_range(tx, self.config.comm_range_m)?;
        if rxs.is_empty() {
            return Ok(None);
        }
        let receivers: Vec<(usize, f64)> =
            rxs.iter().map(|&rx| (rx, self.link_budget(tx, rx).sinr_db)).collect();
        let mut res = prr_procedure(
            &receivers,
            table,
            self.config.velocity_kmh,
            self.config.prr_threshold_bler,
            ue_supported,
            |rx| link_uniform(self.seed, tx, rx),
        )?;
        res.drop_seed = self.seed;
        Ok(Some(res))
    }
}

/// Aggregate of one drop over all tagged transmitters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropOutcome {
    pub mean_prr: f64,
    pub tagged: u64,
    pub undefined: u64,
    pub n_ue_mean: f64,
    pub clamped: u64,
    pub vehicles: u64,
}

/// Builds a drop from `seed` and averages the PRR over every interior transmitter.
pub fn evaluate_drop(cfg: &ScenarioConfig, table: &L2sTable, seed: u64) -> Result<DropOutcome> {
    let drop = Drop::new(cfg, seed)?;
    let ue_sup = cfg.ue_supported()?;
    let tagged = drop.topology.interior(cfg.highway_length_m, cfg.edge_exclusion_m);
    let mut sum = 0.0;
    let mut n_ue = 0.0;
    let mut defined = 0u64;
    let mut clamped = 0u64;
    for &tx in &tagged {
        if let Some(r) = drop.prr_single(tx, table, ue_sup)? {
            sum += r.prr;
            n_ue += r.n_ue_in_range as f64;
            defined += 1;
            clamped += u64::from(r.clamped);
        }
    }
    if defined == 0 {
        return Err(invalid("no tagged transmitter has a receiver in range"));
    }
    Ok(DropOutcome {
        mean_prr: sum / defined as f64,
        tagged: defined,
        undefined: tagged.len() as u64 - defined,
        n_ue_mean: n_ue / defined as f64,
        clamped,
        vehicles: drop.topology.vehicles.len() as u64,
    })
}

/// Seed of drop `index` for a sweep point; velocity and period do not enter, so points that
/// differ only in those share topologies and draws.
pub fn drop_seed(master: u64, ivd_m: f64, index: u64) -> u64 {
    rng::derive_seed(master, &[0xd209, ivd_m.to_bits(), index])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l2s::TableMetadata;
    use crate::scenario::{Topology, Vehicle};
    use alloc::vec;
    use rand::{Rng, SeedableRng};

    fn vehicle(id: usize, x: f64) -> Vehicle {
        Vehicle { id, x, y: 2.0, lane: 0, direction: 1, velocity_kmh: 100.0 }
    }

    fn line(xs: &[f64]) -> Topology {
        Topology {
            vehicles: xs.iter().enumerate().map(|(i, &x)| vehicle(i, x)).collect(),
            base_stations: Vec::new(),
        }
    }

    fn step_table() -> L2sTable {
        L2sTable {
            snr_grid_db: vec![0.0, 10.0, 20.0],
            velocities_kmh: vec![100.0],
            bler: vec![vec![0.5, 0.005, 0.0]],
            metadata: TableMetadata::default(),
        }
    }

    #[test]
    fn spectral_efficiency_examples() {
        let se = spectral_efficiency(2048.0, 100.0, 10.0, 10e6).unwrap();
        assert!((se - 0.2048).abs() < 1e-15);
        assert_eq!(spectral_efficiency(2048.0, 0.0, 10.0, 10e6).unwrap(), 0.0);
        let se20 = spectral_efficiency(2048.0, 100.0, 20.0, 10e6).unwrap();
        assert!((se20 - 2.0 * se).abs() < 1e-15);
        assert_eq!(ue_supported(0.2048, 10e6, 2048.0, 10.0).unwrap(), 100);
        assert!(ue_supported(0.0, 10e6, 2048.0, 10.0).is_err());
    }

    #[test]
    fn grid_efficiency_gives_reference_capacity() {
        let se = default_spectral_efficiency();
        assert!((se - 0.593).abs() < 5e-4, "{se}");
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.ue_supported().unwrap(), 289);
        let fast = ScenarioConfig { tx_period_hz: 20.0, ..cfg };
        assert_eq!(fast.ue_supported().unwrap(), 144);
    }

    #[test]
    fn capacity_round_trip() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..1000 {
            let ue: u64 = rng.random_range(1..5000);
            let p = f64::from(rng.random_range(8u32..20_000));
            let period = rng.random_range(1.0..100.0);
            let bw = rng.random_range(1e5..1e8);
            let se = spectral_efficiency(p, ue as f64, period, bw).unwrap();
            assert_eq!(ue_supported(se, bw, p, period).unwrap(), ue);
        }
    }

    #[test]
    fn sinr_examples() {
        assert!((sinr_db(-60.0, f64::NEG_INFINITY, -95.0) - 35.0).abs() < 1e-12);
        assert!(sinr_db(-40.0, -40.0, -140.0).abs() < 1e-9);
        // 1e-6 mW / (1e-7 + 10^-9.5) mW.
        let hand = 10.0 * (1e-6f64 / (1e-7 + 10f64.powf(-9.5))).log10();
        assert!((hand - 9.986).abs() < 5e-4);
        assert!((sinr_db(-60.0, -70.0, -95.0) - hand).abs() < 1e-9);
    }

    #[test]
    fn fewer_transmitters_than_resources_means_no_reuse() {
        let topo = line(&[0.0, 10.0, 20.0]);
        let a = assign_resources(&topo, 3).unwrap();
        assert_eq!(a, vec![0, 1, 2]);
        assert_eq!(min_reuse_distance(&topo, &a), f64::INFINITY);
        let cfg = ScenarioConfig { window_subframes: 1, ..ScenarioConfig::default() };
        let drop = Drop::from_topology(&cfg, topo, 1).unwrap();
        let b = drop.link_budget(0, 1);
        assert!(!b.has_interference());
        assert!((b.sinr_db - (b.wanted_power_dbm - b.noise_power_dbm)).abs() < 1e-12);
    }

    #[test]
    fn single_resource_pairs_everyone() {
        let topo = line(&[0.0, 50.0]);
        let a = assign_resources(&topo, 1).unwrap();
        assert_eq!(a, vec![0, 0]);
        assert_eq!(min_reuse_distance(&topo, &a), 50.0);
    }

    #[test]
    fn equal_interferer_gives_zero_db_and_two_give_three() {
        // Rx at 0, wanted tx at +100, co-channel txs at -100 and (later) a second one at -100 on
        // the other side of the road so distances stay equal.
        let cfg = ScenarioConfig {
            shadow_sigma_db: 0.0,
            noise_figure_db: -60.0,
            window_subframes: 1,
            subchannels: 1,
            ..ScenarioConfig::default()
        };
        let mut topo = line(&[0.0, 100.0, -100.0]);
        let drop = Drop::from_topology(&cfg, topo.clone(), 0).unwrap();
        let one = drop.link_budget(1, 0);
        assert!(one.sinr_db.abs() < 1e-3, "{}", one.sinr_db);
        topo.vehicles.push(Vehicle { id: 3, x: 0.0, y: 102.0, ..vehicle(3, 0.0) });
        let drop = Drop::from_topology(&cfg, topo, 0).unwrap();
        let two = drop.link_budget(1, 0);
        let delta = two.interference_power_dbm - one.interference_power_dbm;
        assert!((delta - 3.0103).abs() < 1e-3, "{delta}");
        let back = sinr_db(two.wanted_power_dbm, two.interference_power_dbm, two.noise_power_dbm);
        assert!((back - two.sinr_db).abs() < 1e-9);
    }

    #[test]
    fn greedy_reuse_beats_random_assignment() {
        let cfg = ScenarioConfig { ivd_m: 20.0, ..ScenarioConfig::default() };
        let mut wins = 0;
        let trials = 40;
        for seed in 0..trials {
            let topo = build_topology(&cfg, seed).unwrap();
            let n_res = cfg.resources();
            let greedy = assign_resources(&topo, n_res).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed + 1000);
            let random: Vec<usize> = (0..topo.vehicles.len()).map(|_| rng.random_range(0..n_res)).collect();
            if min_reuse_distance(&topo, &greedy) >= min_reuse_distance(&topo, &random) {
                wins += 1;
            }
        }
        assert!(wins as f64 >= 0.95 * trials as f64, "{wins}/{trials}");
    }

    #[test]
    fn hand_computed_three_receiver_drop() {
        let table = step_table();
        // SINRs on grid points force BLERs 0, 0.005 and 0.5.
        let receivers = [(7, 20.0), (8, 10.0), (9, 0.0)];
        let draws = |rx: usize| match rx {
            7 => 0.3,
            8 => 0.004,
            _ => panic!("receiver 9 fails the threshold and must not draw"),
        };
        let r = prr_procedure(&receivers, &table, 100.0, 0.01, 2, draws).unwrap();
        // rx 7: 0 < 0.3 passes; rx 8: 0.005 < 0.004 fails; rx 9 never drawn.
        assert_eq!(r.counter_success, 1);
        assert_eq!(r.n_ue_in_range, 3);
        assert_eq!(r.prr, (1.0 / 3.0) * (2.0 / 3.0));
        assert!(!r.clamped);
        assert_eq!(r.per_rx[2].random_test_pass, None);
        assert!(!r.per_rx[2].passed_threshold);
        let r = prr_procedure(&receivers, &table, 100.0, 0.01, 2, |_| 0.9).unwrap();
        assert_eq!(r.counter_success, 2);
        assert_eq!(r.prr, (2.0 / 3.0) * (2.0 / 3.0));
    }

    #[test]
    fn clean_receivers_and_clamp() {
        let table = step_table();
        let receivers = [(1, 30.0), (2, 25.0)];
        let r = prr_procedure(&receivers, &table, 100.0, 0.01, 289, |_| 1e-9).unwrap();
        assert_eq!(r.counter_success, 2);
        assert_eq!(r.prr, 1.0);
        assert!(r.clamped);
        let r = prr_procedure(&[(1, -5.0)], &table, 100.0, 0.01, 289, |_| 0.5).unwrap();
        assert_eq!(r.prr, 0.0);
        assert!(prr_procedure(&[], &table, 100.0, 0.01, 289, |_| 0.5).is_err());
    }

    #[test]
    fn drops_are_deterministic_and_bounded() {
        let table = step_table();
        let cfg = ScenarioConfig::default();
        let a = evaluate_drop(&cfg, &table, 3).unwrap();
        let b = evaluate_drop(&cfg, &table, 3).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.mean_prr));
        assert!(a.tagged > 0 && a.n_ue_mean > 0.0);
    }
}
