//! Parameter sweeps: one run directory per point of the cartesian product
//! of `--param key=v1,v2,...` assignments, executed on a worker pool.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use modscatter_core::SimConfig;
use serde::Serialize;
use serde_json::Value;

use crate::analyze::{analyze_series, write_reports};
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_SOLVER};
use crate::rundir::{create_dir, parse_config, run, validate_config, write_json};

pub const SWEEP_FILE: &str = "sweep.json";
pub const THREADS_VAR: &str = "MODSCATTER_THREADS";

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    /// Dotted path into the config, e.g. `eps` or `initial_shape.width`.
    pub key: String,
    pub values: Vec<Value>,
}

pub fn parse_param(arg: &str) -> CliResult<Param> {
    let (key, list) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--param {arg:?} is not key=v1,v2,...")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("--param {arg:?} has an empty key")));
    }
    let values: Vec<Value> = list
        .split(',')
        .map(|v| {
            let v = v.trim();
            serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()))
        })
        .collect();
    if values.iter().any(|v| v.as_str() == Some("")) {
        return Err(CliError::Config(format!("--param {arg:?} has an empty value")));
    }
    Ok(Param {
        key: key.to_string(),
        values,
    })
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> CliResult<()> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("{key}: {part:?} is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .get_mut(*part)
            .ok_or_else(|| CliError::Config(format!("{key}: template has no {part:?}")))?;
    }
    unreachable!("split yields at least one part")
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Every combination of the parameter values, named `k1=v1_k2=v2`.
pub fn expand(template: &Value, params: &[Param]) -> CliResult<Vec<(String, SimConfig)>> {
    let mut points = vec![(Vec::<String>::new(), template.clone())];
    for p in params {
        let mut next = Vec::with_capacity(points.len() * p.values.len());
        for (names, doc) in &points {
            for v in &p.values {
                let mut doc = doc.clone();
                set_path(&mut doc, &p.key, v.clone())?;
                let mut names = names.clone();
                names.push(format!("{}={}", p.key, value_label(v)));
                next.push((names, doc));
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|(names, doc)| {
            let name = if names.is_empty() { "base".to_string() } else { names.join("_") };
            let config = parse_config(&doc.to_string())
                .map_err(|e| CliError::Config(format!("sweep point {name}: {e}")))?;
            Ok((name, config))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub name: String,
    pub dir: PathBuf,
    pub exit_code: i32,
    pub message: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub threads: usize,
    pub points: Vec<SweepPoint>,
}

impl SweepSummary {
    /// The first nonzero point exit code, or 0.
    pub fn exit_code(&self) -> i32 {
        self.points
            .iter()
            .map(|p| p.exit_code)
            .find(|&c| c != EXIT_OK)
            .unwrap_or(EXIT_OK)
    }
}

/// Worker count: `MODSCATTER_THREADS` if set, else the available
/// parallelism, never more than `jobs`.
pub fn thread_count(jobs: usize) -> CliResult<usize> {
    let cap = match std::env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{THREADS_VAR}={v:?} is not a positive integer")))?,
        Err(_) => thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(cap.min(jobs).max(1))
}

fn run_point(config: &SimConfig, dir: &Path) -> (i32, Option<String>) {
    let outcome = match run(config, dir, true) {
        Ok(o) => o,
        Err(e) => return (e.exit_code(), Some(e.to_string())),
    };
    if let Some(abort) = outcome.abort {
        return (EXIT_SOLVER, Some(format!("solver aborted: {abort}")));
    }
    match analyze_series(&outcome.series).and_then(|a| write_reports(&a, dir)) {
        Ok(()) => (EXIT_OK, None),
        Err(e) => (e.exit_code(), Some(e.to_string())),
    }
}

/// Validates every point up front (so a bad point fails the sweep before
/// any work), then runs and analyzes the points concurrently.
pub fn sweep(template: &Path, params: &[Param], out: &Path) -> CliResult<SweepSummary> {
    let base = crate::rundir::load_config(template)?;
    let doc = serde_json::to_value(&base).map_err(|e| CliError::Config(e.to_string()))?;
    let points = expand(&doc, params)?;
    for (_, config) in &points {
        validate_config(config)?;
    }
    create_dir(out)?;
    let threads = thread_count(points.len())?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<SweepPoint>>> = Mutex::new(vec![None; points.len()]);
    thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some((name, config)) = points.get(k) else {
                    break;
                };
                let dir = out.join(name);
                let (exit_code, message) = run_point(config, &dir);
                results.lock().expect("no worker panics while holding the lock")[k] = Some(SweepPoint {
                    name: name.clone(),
                    dir,
                    exit_code,
                    message,
                });
            });
        }
    });
    let points = results
        .into_inner()
        .expect("workers have finished")
        .into_iter()
        .map(|p| p.expect("every point ran"))
        .collect();
    let summary = SweepSummary { threads, points };
    write_json(&out.join(SWEEP_FILE), &summary)?;
    Ok(summary)
}
