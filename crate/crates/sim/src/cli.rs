//! Command-line front end.

use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sidelink_core::l2s::{L2sTable, TableMetadata};
use sidelink_core::scenario::build_topology;

use crate::config::{config_hash, RunConfig};
use crate::error::{Error, Result};
use crate::io::{self, Provenance};
use crate::link::LinkSim;
use crate::ll_campaign::{self, BlerPoint};
use crate::phy::grid::scfdma_modulate;
use crate::sl_campaign::{self, PrrPoint};

pub const SEED_ENV: &str = "SIDELINK_SIM_SEED";

#[derive(Debug, Parser)]
#[command(name = "sidelink-sim", version, about = "LTE sidelink link-level and system-level simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo BLER sweep over SNR and velocity; writes the L2S table.
    #[command(allow_negative_numbers = true)]
    LlSweep(LlArgs),
    /// Packet reception ratio over IVD, velocity and period using an L2S table.
    #[command(allow_negative_numbers = true)]
    SlPrr(SlArgs),
    /// Prints a table's grids, metadata and monotonicity report.
    #[command(allow_negative_numbers = true)]
    TableInspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed (falls back to SIDELINK_SIM_SEED, then the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LlArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// SNR grid in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Vec<f64>,
    /// Velocities in km/h, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub velocity: Vec<f64>,
    /// Blocks per grid point.
    #[arg(long)]
    pub blocks: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SlArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// L2S table; defaults to `<out>/l2s_table.json`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Inter-vehicle distances in metres, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ivd: Vec<f64>,
    /// Velocities in km/h, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub velocity: Vec<f64>,
    /// Transmission frequencies in Hz, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub period: Vec<f64>,
    /// Drops per sweep point.
    #[arg(long)]
    pub drops: Option<u64>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Interpolated lookup at `snr,velocity`.
    #[arg(long, allow_hyphen_values = true)]
    pub query: Option<String>,
}

/// How a command ended when it did not fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Done,
    Partial,
}

impl Completion {
    pub fn exit_code(self) -> i32 {
        match self {
            Completion::Done => 0,
            Completion::Partial => 3,
        }
    }
}

/// Marker left next to partial results.
pub const PARTIAL_MARKER: &str = "INCOMPLETE.json";

#[derive(Serialize)]
struct PartialMarker<'a> {
    command: &'a str,
    completed_points: usize,
    total_points: usize,
    partial_results: &'a str,
    note: &'a str,
    #[serde(flatten)]
    provenance: &'a Provenance,
}

pub fn run(cli: Cli, stop: &AtomicBool) -> Result<Completion> {
    match cli.command {
        Command::LlSweep(a) => ll_sweep(&a, stop),
        Command::SlPrr(a) => sl_prr(&a, stop),
        Command::TableInspect(a) => table_inspect(&a),
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// Flag, then environment, then the file value.
pub fn resolve_seed(flag: Option<u64>, file_value: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(file_value),
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let n = match workers {
        Some(0) => return Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn write_partial(
    out: &Path,
    command: &str,
    done: usize,
    total: usize,
    file: &str,
    prov: &Provenance,
) -> Result<()> {
    io::write_json(
        &out.join(PARTIAL_MARKER),
        &PartialMarker {
            command,
            completed_points: done,
            total_points: total,
            partial_results: file,
            note: "run was interrupted; rerun the same command to produce complete results",
            provenance: prov,
        },
    )
}

fn ll_sweep(a: &LlArgs, stop: &AtomicBool) -> Result<Completion> {
    let mut run_cfg = load_config(&a.common)?;
    let cfg = &mut run_cfg.ll;
    cfg.seed = resolve_seed(a.common.seed, cfg.seed)?;
    if !a.snr.is_empty() {
        cfg.snr_grid_db = a.snr.clone();
    }
    if !a.velocity.is_empty() {
        cfg.velocities_kmh = a.velocity.clone();
    }
    if let Some(b) = a.blocks {
        cfg.blocks_per_point = b;
    }
    cfg.validate()?;
    let cfg = run_cfg.ll.clone();
    let out = &a.common.out;
    io::ensure_dir(out)?;
    let prov = Provenance::new(config_hash(&cfg)?, cfg.seed);
    io::write_json(&out.join("effective_config.json"), &run_cfg)?;
    let _ = std::fs::remove_file(out.join(PARTIAL_MARKER));

    let total = cfg.n_points();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let progress = |p: &BlerPoint| {
        let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        eprintln!(
            "[{k}/{total}] snr {:>6.2} dB  v {:>5} km/h  bler {:.4}  ({} blocks)",
            p.snr_db, p.velocity_kmh, p.pssch_bler, p.blocks
        );
    };
    let outcome = with_workers(a.common.workers, || ll_campaign::run_sweep(&cfg, stop, &progress))??;

    if !outcome.is_complete(&cfg) {
        let name = "bler_points.partial.csv";
        io::write_file(&out.join(name), io::bler_points_csv(&outcome.points, &prov))?;
        write_partial(out, "ll-sweep", outcome.points.len(), total, name, &prov)?;
        eprintln!(
            "interrupted: {} of {total} points written to {}",
            outcome.points.len(),
            out.join(name).display()
        );
        return Ok(Completion::Partial);
    }

    let sim = LinkSim::new(cfg.link.clone())?;
    let metadata = TableMetadata {
        tool_version: prov.tool_version.clone(),
        config_hash: prov.config_hash.clone(),
        seed: prov.seed,
        bler_definition: cfg.link.bler_definition.as_str().into(),
        snr_definition: cfg.link.snr_reference.describe().into(),
        created: prov.created.clone(),
        transport_block_bits: sim.phy.tbs() as u64,
        coded_bits: sim.phy.pool().pssch_coded_bits() as u64,
        isotonic: cfg.isotonic,
        raw: None,
    };
    let table = ll_campaign::build_table(&cfg, &outcome.points, metadata)?;
    io::save_table(&out.join("l2s_table.json"), &table)?;
    io::write_file(&out.join("bler_points.csv"), io::bler_points_csv(&outcome.points, &prov))?;
    io::write_file(&out.join("bler_plot.dat"), io::bler_plot_dat(&table, &prov))?;

    // Example transmit grid for external inspection.
    let mut rng = sidelink_core::rng::stream(cfg.seed, &[0x6d70]);
    let (tb, cs) = sim.random_payload(&mut rng);
    let grid = sim.phy.build_tx_grid(&sim.sci(), &tb, cs)?;
    scfdma_modulate(&grid, sim.phy.pool(), sim.phy.plans())?;
    io::dump_grid(out, "tx_grid", &grid, &prov)?;
    println!("wrote {} points to {}", outcome.points.len(), out.display());
    Ok(Completion::Done)
}

#[derive(Serialize)]
struct PrrReport<'a> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    table: TableRef<'a>,
    spectral_efficiency: f64,
    points: &'a [PrrPoint],
}

#[derive(Serialize)]
struct TableRef<'a> {
    path: String,
    config_hash: &'a str,
    seed: u64,
    snr_definition: &'a str,
}

fn sl_prr(a: &SlArgs, stop: &AtomicBool) -> Result<Completion> {
    let mut run_cfg = load_config(&a.common)?;
    let cfg = &mut run_cfg.sl;
    cfg.seed = resolve_seed(a.common.seed, cfg.seed)?;
    if !a.ivd.is_empty() {
        cfg.ivds_m = a.ivd.clone();
    }
    if !a.velocity.is_empty() {
        cfg.velocities_kmh = a.velocity.clone();
    }
    if !a.period.is_empty() {
        cfg.periods_hz = a.period.clone();
    }
    if let Some(d) = a.drops {
        cfg.drops = d;
    }
    cfg.validate()?;
    let cfg = run_cfg.sl.clone();
    let out = &a.common.out;
    let table_path = a.table.clone().unwrap_or_else(|| out.join("l2s_table.json"));
    if !table_path.exists() {
        return Err(Error::Config(format!(
            "no L2S table at {}: run ll-sweep first or pass --table",
            table_path.display()
        )));
    }
    let table = io::load_table(&table_path)?;
    io::ensure_dir(out)?;
    let prov = Provenance::new(config_hash(&cfg)?, cfg.seed);
    io::write_json(&out.join("effective_config.json"), &run_cfg)?;
    let _ = std::fs::remove_file(out.join(PARTIAL_MARKER));

    let total = cfg.sweep_points().len();
    let progress = |p: &PrrPoint| {
        eprintln!(
            "ivd {:>6} m  v {:>5} km/h  f {:>4} Hz  prr {:.4} +/- {:.4}",
            p.ivd_m, p.velocity_kmh, p.period_hz, p.mean_prr, p.ci95
        );
    };
    let outcome = with_workers(a.common.workers, || sl_campaign::run_sweep(&cfg, &table, stop, &progress))??;

    for &ivd in &cfg.ivds_m {
        let topo = build_topology(
            &cfg.point_config(&sl_campaign::SweepPoint {
                ivd_m: ivd,
                velocity_kmh: cfg.velocities_kmh[0],
                period_hz: cfg.periods_hz[0],
            }),
            sidelink_core::engine::drop_seed(cfg.seed, ivd, 0),
        )?;
        io::write_file(&out.join(format!("topology_ivd{ivd}.csv")), io::topology_csv(&topo, &prov))?;
    }

    if outcome.interrupted {
        let name = "prr.partial.csv";
        io::write_file(&out.join(name), io::prr_csv(&outcome.points, &prov))?;
        write_partial(out, "sl-prr", outcome.points.len(), total, name, &prov)?;
        eprintln!("interrupted: {} of {total} points written", outcome.points.len());
        return Ok(Completion::Partial);
    }
    io::write_file(&out.join("prr.csv"), io::prr_csv(&outcome.points, &prov))?;
    io::write_file(&out.join("prr_plot.dat"), io::prr_plot_dat(&outcome.points, &prov))?;
    io::write_json(
        &out.join("prr.json"),
        &PrrReport {
            provenance: &prov,
            table: TableRef {
                path: table_path.display().to_string(),
                config_hash: &table.metadata.config_hash,
                seed: table.metadata.seed,
                snr_definition: &table.metadata.snr_definition,
            },
            spectral_efficiency: cfg.scenario.effective_spectral_efficiency(),
            points: &outcome.points,
        },
    )?;
    println!("wrote {} points to {}", outcome.points.len(), out.display());
    Ok(Completion::Done)
}

/// Parses `snr,velocity`.
pub fn parse_query(q: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("--query expects `snr,velocity`, got {q:?}"));
    let (s, v) = q.split_once(',').ok_or_else(bad)?;
    Ok((s.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?))
}

/// Human-readable report of a table.
pub fn inspect_report(table: &L2sTable) -> String {
    use std::fmt::Write as _;
    let m = &table.metadata;
    let mut s = String::new();
    let _ = writeln!(s, "snr_grid_db: {:?}", table.snr_grid_db);
    let _ = writeln!(s, "velocities_kmh: {:?}", table.velocities_kmh);
    let _ = writeln!(
        s,
        "metadata: tool={} config_hash={} seed={} created={} isotonic={} raw_counts={}",
        m.tool_version,
        m.config_hash,
        m.seed,
        m.created,
        m.isotonic,
        m.raw.is_some()
    );
    let _ = writeln!(s, "bler_definition: {}", m.bler_definition);
    let _ = writeln!(s, "snr_definition: {}", m.snr_definition);
    let _ = writeln!(s, "transport_block_bits: {} coded_bits: {}", m.transport_block_bits, m.coded_bits);
    for (v, row) in table.velocities_kmh.iter().zip(&table.bler) {
        let cells: Vec<String> = row.iter().map(|b| format!("{b:.4}")).collect();
        let _ = writeln!(s, "v={v:>6}: {}", cells.join(" "));
    }
    let viol = table.monotonicity_violations();
    if viol.is_empty() {
        let _ = writeln!(s, "monotonicity: all rows non-increasing in SNR");
    } else {
        let _ = writeln!(s, "monotonicity: {} violation(s)", viol.len());
        for (v, i) in viol {
            let _ = writeln!(
                s,
                "  v={} between snr {} and {}",
                table.velocities_kmh[v],
                table.snr_grid_db[i],
                table.snr_grid_db[i + 1]
            );
        }
    }
    s
}

fn table_inspect(a: &InspectArgs) -> Result<Completion> {
    let table = io::load_table(&a.table)?;
    print!("{}", inspect_report(&table));
    if let Some(q) = &a.query {
        let (snr, v) = parse_query(q)?;
        let snapped = table.velocities_kmh[table.velocity_index(v)];
        println!("query snr={snr} velocity={v} (row {snapped}): bler={}", table.lookup(snr, v)?);
    }
    Ok(Completion::Done)
}
