//! Artifact formats: L2S table JSON, CSVs, gnuplot data, topology dumps and grid dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sidelink_core::l2s::{L2sTable, BLER_FLOOR};
use sidelink_core::scenario::Topology;

use crate::config::parse_json;
use crate::error::{Error, Result};
use crate::ll_campaign::BlerPoint;
use crate::phy::grid::ResourceGrid;
use crate::sl_campaign::PrrPoint;

pub const TOOL_VERSION: &str = concat!("sidelink-sim ", env!("CARGO_PKG_VERSION"));

/// Identification stamped into every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub created: String,
}

impl Provenance {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self { tool_version: TOOL_VERSION.to_string(), config_hash, seed, created: timestamp() }
    }

    /// One `#` comment line for text formats.
    pub fn comment(&self) -> String {
        format!(
            "# {} config_hash={} seed={} created={}\n",
            self.tool_version, self.config_hash, self.seed, self.created
        )
    }
}

/// UTC timestamp of the run; `SOURCE_DATE_EPOCH` pins it for reproducible output.
pub fn timestamp() -> String {
    let secs =
        std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse::<i64>().ok()).unwrap_or_else(
            || SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs() as i64).unwrap_or(0),
        );
    chrono::DateTime::from_timestamp(secs, 0).unwrap_or_default().format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invariant(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, to_json(value)?)
}

/// Rounds to 9 significant digits so tables stay readable and diff-stable.
fn sig9(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().unwrap_or(v)
}

pub fn save_table(path: &Path, table: &L2sTable) -> Result<()> {
    let mut t = table.clone();
    for row in &mut t.bler {
        row.iter_mut().for_each(|v| *v = sig9(*v));
    }
    if let Some(raw) = &mut t.metadata.raw {
        for row in &mut raw.bler {
            row.iter_mut().for_each(|v| *v = sig9(*v));
        }
    }
    write_json(path, &t)
}

/// Reads and validates a table; parse failures report line and column.
pub fn load_table(path: &Path) -> Result<L2sTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table: L2sTable = parse_json(&text, path)?;
    table.validate().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(table)
}

pub fn bler_points_csv(points: &[BlerPoint], prov: &Provenance) -> String {
    let mut s = prov.comment();
    s.push_str("snr_db,velocity_kmh,pscch_bler,pssch_bler,blocks,errors,ci95\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{:.6},{:.6},{},{},{:.6}",
            p.snr_db, p.velocity_kmh, p.pscch_bler, p.pssch_bler, p.blocks, p.errors, p.ci95
        );
    }
    s
}

/// Reads the per-point CSV back, skipping comment lines.
pub fn parse_bler_points_csv(text: &str, path: &Path) -> Result<Vec<BlerPoint>> {
    let mut out = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let bad = |column: usize, message: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            column,
            message: message.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(1, "expected 7 fields"));
        }
        let real = |j: usize| f[j].parse::<f64>().map_err(|_| bad(j + 1, "not a number"));
        let int = |j: usize| f[j].parse::<u64>().map_err(|_| bad(j + 1, "not an integer"));
        out.push(BlerPoint {
            snr_db: real(0)?,
            velocity_kmh: real(1)?,
            pscch_bler: real(2)?,
            pssch_bler: real(3)?,
            blocks: int(4)?,
            errors: int(5)?,
            ci95: real(6)?,
        });
    }
    Ok(out)
}

/// Gnuplot data: one block per velocity with `snr log10(bler)`; zero entries sit at the floor.
pub fn bler_plot_dat(table: &L2sTable, prov: &Provenance) -> String {
    let mut s = prov.comment();
    for (v, row) in table.velocities_kmh.iter().zip(&table.bler) {
        let _ = writeln!(s, "# velocity_kmh {v}\n# snr_db log10_bler");
        for (snr, b) in table.snr_grid_db.iter().zip(row) {
            let _ = writeln!(s, "{snr} {:.6}", b.max(BLER_FLOOR).log10());
        }
        s.push_str("\n\n");
    }
    s
}

pub fn prr_csv(points: &[PrrPoint], prov: &Provenance) -> String {
    let mut s = prov.comment();
    s.push_str("ivd_m,velocity_kmh,period_hz,mean_prr,ci95,drops,ue_supported,n_ue_mean\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{},{},{:.3}",
            p.ivd_m, p.velocity_kmh, p.period_hz, p.mean_prr, p.ci95, p.drops, p.ue_supported, p.n_ue_mean
        );
    }
    s
}

/// Gnuplot data: one block per (velocity, period) curve with `ivd mean_prr ci95`.
pub fn prr_plot_dat(points: &[PrrPoint], prov: &Provenance) -> String {
    let mut s = prov.comment();
    let mut curves: Vec<(f64, f64)> = Vec::new();
    for p in points {
        if !curves.contains(&(p.velocity_kmh, p.period_hz)) {
            curves.push((p.velocity_kmh, p.period_hz));
        }
    }
    for (v, f) in curves {
        let _ = writeln!(s, "# velocity_kmh {v} period_hz {f}\n# ivd_m mean_prr ci95");
        for p in points.iter().filter(|p| p.velocity_kmh == v && p.period_hz == f) {
            let _ = writeln!(s, "{} {:.6} {:.6}", p.ivd_m, p.mean_prr, p.ci95);
        }
        s.push_str("\n\n");
    }
    s
}

pub fn topology_csv(topo: &Topology, prov: &Provenance) -> String {
    let mut s = prov.comment();
    s.push_str("id,x,y,lane,direction,velocity\n");
    for v in &topo.vehicles {
        let _ = writeln!(s, "{},{:.3},{:.3},{},{},{}", v.id, v.x, v.y, v.lane, v.direction, v.velocity_kmh);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub dtype: String,
    pub layout: String,
    pub data_file: String,
    pub occupied_cells: usize,
    #[serde(flatten)]
    pub provenance: Provenance,
}

/// Writes `<stem>.c64` (little-endian complex64, symbol-major) and `<stem>.json`.
pub fn dump_grid(
    dir: &Path,
    stem: &str,
    grid: &ResourceGrid,
    prov: &Provenance,
) -> Result<(PathBuf, PathBuf)> {
    let data = dir.join(format!("{stem}.c64"));
    let side = dir.join(format!("{stem}.json"));
    let mut bytes = Vec::with_capacity(grid.cells.len() * 8);
    for c in &grid.cells {
        bytes.extend_from_slice(&(c.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(c.im as f32).to_le_bytes());
    }
    write_file(&data, bytes)?;
    let census = grid.census();
    let sidecar = GridSidecar {
        n_subcarriers: grid.n_subcarriers,
        n_symbols: grid.n_symbols,
        dtype: "complex64 little-endian (f32 re, f32 im)".into(),
        layout: "symbol-major: cell (k, l) at index l * n_subcarriers + k".into(),
        data_file: format!("{stem}.c64"),
        occupied_cells: census.pscch + census.pssch + census.dmrs,
        provenance: prov.clone(),
    };
    write_json(&side, &sidecar)?;
    Ok((data, side))
}

/// Reads a grid dump back (values only).
pub fn load_grid_dump(data: &Path, sidecar: &Path) -> Result<(GridSidecar, Vec<sidelink_core::Complex64>)> {
    let meta: GridSidecar = crate::config::read_json(sidecar)?;
    let bytes = fs::read(data).map_err(|e| Error::io(data, e))?;
    if bytes.len() != meta.n_subcarriers * meta.n_symbols * 8 {
        return Err(Error::Config(format!("{}: size does not match sidecar", data.display())));
    }
    let f = |b: &[u8]| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    let cells =
        bytes.chunks_exact(8).map(|c| sidelink_core::Complex64::new(f(&c[..4]), f(&c[4..]))).collect();
    Ok((meta, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sidelink_core::l2s::TableMetadata;

    #[test]
    fn sig9_rounds() {
        assert_eq!(sig9(0.123456789123), 0.123456789);
        assert_eq!(sig9(0.0), 0.0);
    }

    #[test]
    fn table_round_trip_and_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let t = L2sTable {
            snr_grid_db: vec![0.0, 1.0],
            velocities_kmh: vec![100.0],
            bler: vec![vec![0.5, 0.0123456789012]],
            metadata: TableMetadata::default(),
        };
        save_table(&path, &t).unwrap();
        let back = load_table(&path).unwrap();
        assert_eq!(back.bler[0][1], 0.0123456789);
        write_file(&path, "{\n \"snr_grid_db\": [0],\n \"velocities_kmh\": [1]\n}").unwrap();
        let err = load_table(&path).unwrap_err();
        assert!(err.to_string().contains("missing field `bler`"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bler_csv_round_trip() {
        let prov = Provenance::new("abc".into(), 3);
        let p = BlerPoint {
            snr_db: -1.5,
            velocity_kmh: 100.0,
            pscch_bler: 0.25,
            pssch_bler: 0.5,
            blocks: 100,
            errors: 50,
            ci95: 0.097,
        };
        let text = bler_points_csv(&[p], &prov);
        assert!(text.starts_with("# sidelink-sim"));
        assert_eq!(parse_bler_points_csv(&text, Path::new("p.csv")).unwrap(), vec![p]);
        let err = parse_bler_points_csv("h\n1,2\n", Path::new("p.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn grid_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut g = ResourceGrid::new(4, 2);
        g.set(1, 1, sidelink_core::Complex64::new(0.5, -0.25), crate::phy::grid::Occupancy::Pssch);
        let prov = Provenance::new("h".into(), 1);
        let (d, s) = dump_grid(dir.path(), "g", &g, &prov).unwrap();
        assert_eq!(fs::metadata(&d).unwrap().len(), 64);
        let (meta, cells) = load_grid_dump(&d, &s).unwrap();
        assert_eq!((meta.n_subcarriers, meta.occupied_cells), (4, 1));
        assert_eq!(cells, g.cells);
    }

    #[test]
    fn pinned_timestamp() {
        // Only checks the format; the value depends on the environment.
        let t = timestamp();
        assert_eq!(t.len(), 20);
        assert!(t.ends_with('Z'));
    }
}
