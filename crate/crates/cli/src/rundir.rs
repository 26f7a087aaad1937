//! Run directories: `config.json`, `snapshots/tNNNN.cf`, `norms.csv` and
//! `run.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use modscatter_core::cf;
use modscatter_core::config::InitialShape;
use modscatter_core::evolution::{evolve_partial, initial_profile, Snapshot, SnapshotSeries};
use modscatter_core::{Error as CoreError, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_FILE: &str = "config.json";
pub const RUN_FILE: &str = "run.json";
pub const NORMS_FILE: &str = "norms.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub fn snapshot_name(index: usize) -> String {
    format!("t{index:04}.cf")
}

/// Full-precision CSV cell.
pub fn cell(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(CliError::io(path))
}

/// Parses and statically validates a config; a relative custom-file path
/// is taken relative to the config file.
pub fn load_config(path: &Path) -> CliResult<SimConfig> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut config = parse_config(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let InitialShape::CustomFile { path: file } = &mut config.initial_shape {
        if file.is_relative() {
            if let Some(dir) = path.parent() {
                *file = dir.join(&*file);
            }
        }
    }
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<SimConfig, String> {
    let config: SimConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
    config.validate_static().map_err(|e| e.to_string())?;
    Ok(config)
}

/// Checks everything `evolve` would reject before any time step.
pub fn validate_config(config: &SimConfig) -> CliResult<()> {
    let u_star = initial_profile(config).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate(&u_star).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakRecord {
    pub time: f64,
    pub amplitude: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub snapshots: usize,
    pub t_last: f64,
    pub initial_size: f64,
    pub mass_drift: f64,
    pub max_boundary_amplitude: f64,
    /// Set when the last snapshot tripped the leak monitor.
    pub leak: Option<LeakRecord>,
    pub abort: Option<String>,
    pub wall_time_s: f64,
    pub version: String,
}

pub struct RunOutcome {
    pub series: SnapshotSeries,
    pub record: RunRecord,
    pub abort: Option<CoreError>,
}

pub fn norms_csv(series: &SnapshotSeries) -> String {
    let mut out = String::from("time,l2,linf,hdot_m0,hdot_0m\n");
    for n in &series.norm_table {
        let row = [n.time, n.l2, n.linf, n.hdot_m0, n.hdot_0m].map(cell);
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Integrates `config` into `out`. Snapshots are written as they are
/// produced (when `keep_snapshots`), so an abort leaves everything recorded
/// so far on disk; the abort is returned in the outcome, not as an error.
pub fn run(config: &SimConfig, out: &Path, keep_snapshots: bool) -> CliResult<RunOutcome> {
    validate_config(config)?;
    create_dir(out)?;
    write_json(&out.join(CONFIG_FILE), config)?;
    let snap_dir = out.join(SNAPSHOT_DIR);
    if keep_snapshots {
        create_dir(&snap_dir)?;
    }
    let start = Instant::now();
    let mut index = 0;
    let mut write_err = None;
    let evolved = evolve_partial(config, |snap| {
        if keep_snapshots {
            let path = snap_dir.join(snapshot_name(index));
            if let Err(e) = cf::write_file(&snap.u, &path) {
                write_err = Some(CliError::RunDir {
                    path,
                    msg: e.to_string(),
                });
                return Err(CoreError::Rejected("snapshot write failed".into()));
            }
        }
        index += 1;
        Ok(())
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    let (series, abort) = evolved.map_err(CliError::from_core)?;
    let wall = start.elapsed().as_secs_f64();
    let leak = match &abort {
        Some(CoreError::Leak {
            time,
            amplitude,
            threshold,
        }) => Some(LeakRecord {
            time: *time,
            amplitude: *amplitude,
            threshold: *threshold,
        }),
        _ => None,
    };
    let record = RunRecord {
        snapshots: series.snapshots.len(),
        t_last: series.last().time,
        initial_size: series.initial_size,
        mass_drift: series.mass_drift,
        max_boundary_amplitude: series.max_boundary_amplitude,
        leak,
        abort: abort.as_ref().map(|e| e.to_string()),
        wall_time_s: wall,
        version: env!("CARGO_PKG_VERSION").into(),
    };
    write_text(&out.join(NORMS_FILE), &norms_csv(&series))?;
    write_json(&out.join(RUN_FILE), &record)?;
    Ok(RunOutcome {
        series,
        record,
        abort,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::RunDir {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::RunDir {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Reloads a completed (or leak-aborted) run directory.
pub fn load_run(dir: &Path) -> CliResult<(SnapshotSeries, RunRecord)> {
    let bad = |path: PathBuf, msg: String| CliError::RunDir { path, msg };
    let config_path = dir.join(CONFIG_FILE);
    let config: SimConfig = read_json(&config_path)?;
    config
        .validate_static()
        .map_err(|e| bad(config_path.clone(), e.to_string()))?;
    let record: RunRecord = read_json(&dir.join(RUN_FILE))?;
    if record.snapshots == 0 {
        return Err(bad(dir.join(RUN_FILE), "run recorded no snapshots".into()));
    }
    let mut snapshots = Vec::with_capacity(record.snapshots);
    for k in 0..record.snapshots {
        let path = dir.join(SNAPSHOT_DIR).join(snapshot_name(k));
        let u = cf::read_file(&path).map_err(|e| bad(path.clone(), e.to_string()))?;
        if u.grid != config.grid {
            return Err(bad(path, "snapshot grid differs from config.json".into()));
        }
        if let Some(prev) = snapshots.last().map(|s: &Snapshot| s.time) {
            if u.time <= prev {
                return Err(bad(path, format!("time {} does not follow {prev}", u.time)));
            }
        }
        snapshots.push(Snapshot::new(u).map_err(|e| bad(path.clone(), e.to_string()))?);
    }
    if let (Some(_), Some(last)) = (&record.leak, snapshots.last_mut()) {
        last.leak = true;
    }
    let series = SnapshotSeries::from_snapshots(config, snapshots, record.initial_size)
        .map_err(|e| bad(dir.to_path_buf(), e.to_string()))?;
    Ok((series, record))
}
