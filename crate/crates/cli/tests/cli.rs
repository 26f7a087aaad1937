use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modscatter::analyze::{quadrature_report, QuadratureReport};
use modscatter::rundir::{load_run, run};
use modscatter::sweep::{expand, parse_param};
use modscatter::verify::{coarse_config, dispersive_estimate, free_propagator_oracle};
use modscatter_core::cf;
use modscatter_core::evolution::initial_profile;
use modscatter_core::fourier::forward_transform;
use modscatter_core::SimConfig;
use serde_json::{json, Value};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modscatter"))
        .args(args)
        .env("MODSCATTER_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn config(eps: f64) -> Value {
    json!({
        "equation": "nls1d",
        "grid": { "points": [8192], "length": [1600.0] },
        "t_end": 60.0,
        "eps": eps,
        "initial_shape": { "type": "gaussian", "width": 1.0 }
    })
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run_cli(dir: &Path, name: &str, value: &Value) -> (Output, PathBuf) {
    let cfg = write_config(dir, &format!("{name}.json"), value);
    let out = dir.join(name);
    let o = bin(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (o, out)
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn zero_data_runs_and_analyzes_as_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let (o, run_dir) = run_cli(dir.path(), "zero", &config(0.0));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.json", "norms.csv", "run.json", "snapshots/t0000.cf"] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    let (header, rows) = csv_rows(&run_dir.join("norms.csv"));
    assert_eq!(header, ["time", "l2", "linf", "hdot_m0", "hdot_0m"]);
    for r in &rows {
        assert!(r[1..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0));
    }
    let o = bin(&["analyze", run_dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: Value = serde_json::from_str(&fs::read_to_string(run_dir.join("scattering.json")).unwrap()).unwrap();
    let degenerate = s["summary"]["degenerate"].as_object().unwrap();
    assert!(degenerate.contains_key("delta") && degenerate.contains_key("decay"));
    assert!(s["resonance"]["degenerate"].as_object().unwrap().contains_key("remainder"));
}

#[test]
fn norms_are_deterministic_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(0.5);
    c["t_end"] = json!(8.0);
    let (a, da) = run_cli(dir.path(), "a", &c);
    let (b, db) = run_cli(dir.path(), "b", &c);
    assert_eq!((code(&a), code(&b)), (0, 0));
    let na = fs::read(da.join("norms.csv")).unwrap();
    assert_eq!(na, fs::read(db.join("norms.csv")).unwrap());
    // every cell re-reads to the exact value held by the run
    let (series, _) = load_run(&da).unwrap();
    let (_, rows) = csv_rows(&da.join("norms.csv"));
    for (r, n) in rows.iter().zip(&series.norm_table) {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(v, [n.time, n.l2, n.linf, n.hdot_m0, n.hdot_0m]);
    }
    let rec: Value = serde_json::from_str(&fs::read_to_string(da.join("run.json")).unwrap()).unwrap();
    assert!(rec["mass_drift"].as_f64().unwrap() < 1e-10);
    assert!(rec["leak"].is_null());
}

#[test]
fn config_errors_exit_2_and_name_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let mut small = config(0.5);
    small["grid"] = json!({ "points": [1024], "length": [100.0] });
    let (o, out) = run_cli(dir.path(), "small", &small);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("box length"));
    assert!(!out.exists());

    let mut unknown = config(0.5);
    unknown["epsilon"] = json!(0.5);
    assert_eq!(code(&run_cli(dir.path(), "unknown", &unknown).0), 2);

    let mut dt = config(0.5);
    dt["dt"] = json!(0.5);
    let (o, _) = run_cli(dir.path(), "dt", &dt);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dt"));
}

#[test]
fn leak_abort_keeps_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(0.5);
    c["leak_threshold"] = json!(1e-300);
    let (o, out) = run_cli(dir.path(), "leak", &c);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("leak"));
    assert!(out.join("snapshots/t0000.cf").exists());
    let rec: Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(rec["snapshots"], json!(1));
    assert!(rec["leak"]["amplitude"].as_f64().unwrap() > 1e-300);
    let (series, _) = load_run(&out).unwrap();
    assert!(series.leak_flagged());
}

#[test]
fn free_flow_hook_recovers_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(0.5);
    c["linear_only"] = json!(true);
    let (o, out) = run_cli(dir.path(), "free", &c);
    assert_eq!(code(&o), 0);
    let before: Vec<Vec<u8>> = (0..3)
        .map(|k| fs::read(out.join(format!("snapshots/t{k:04}.cf"))).unwrap())
        .collect();
    assert_eq!(code(&bin(&["analyze", out.to_str().unwrap()])), 0);
    let after: Vec<Vec<u8>> = (0..3)
        .map(|k| fs::read(out.join(format!("snapshots/t{k:04}.cf"))).unwrap())
        .collect();
    assert_eq!(before, after);

    let w = cf::read_file(out.join("W.cf")).unwrap();
    let config: SimConfig = serde_json::from_value(c).unwrap();
    let u_star = forward_transform(&initial_profile(&config).unwrap()).unwrap();
    assert!(w.max_abs_diff(&u_star) < 1e-10);

    let (header, rows) = csv_rows(&out.join("fits.csv"));
    assert_eq!(
        header,
        ["time", "linf", "cauchy_diff_w", "cauchy_diff_f", "weighted_norm", "arg_peak"]
    );
    assert_eq!(rows.last().unwrap()[2], "");
    let (header, rows) = csv_rows(&out.join("resonance.csv"));
    assert_eq!(header, ["time", "leading_sup", "remainder_sup", "ratio"]);
    // without the nonlinearity the remainder cancels the leading term
    for r in &rows {
        assert_eq!(r[3].parse::<f64>().unwrap(), 1.0);
    }
    let q: Value = serde_json::from_str(&fs::read_to_string(out.join("quadrature.json")).unwrap()).unwrap();
    assert!(q["skipped"].is_string());
}

#[test]
fn analyze_names_a_missing_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(0.5);
    c["t_end"] = json!(4.0);
    let (o, out) = run_cli(dir.path(), "gap", &c);
    assert_eq!(code(&o), 0);
    fs::remove_file(out.join("snapshots/t0003.cf")).unwrap();
    let o = bin(&["analyze", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("t0003.cf"));
    fs::write(out.join("snapshots/t0003.cf"), b"{\"dim\":1}\n").unwrap();
    assert_eq!(code(&bin(&["analyze", out.to_str().unwrap()])), 2);
}

#[test]
fn sweep_runs_every_point() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(0.5);
    c["t_end"] = json!(4.0);
    c["grid"] = json!({ "points": [1024], "length": [200.0] });
    let cfg = write_config(dir.path(), "template.json", &c);
    let out = dir.path().join("sweep");
    let o = bin(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--param",
        "eps=0.2,0.3",
        "--param",
        "initial_shape.width=1.0,1.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    // four snapshots are too few for the scattering fits: analysis fails,
    // the runs themselves are complete
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(summary["threads"], json!(2));
    let points = summary["points"].as_array().unwrap();
    assert_eq!(points.len(), 4);
    assert_eq!(points[0]["name"], json!("eps=0.2_initial_shape.width=1.0"));
    for p in points {
        let d = PathBuf::from(p["dir"].as_str().unwrap());
        assert!(d.join("norms.csv").exists());
        let cfg: Value = serde_json::from_str(&fs::read_to_string(d.join("config.json")).unwrap()).unwrap();
        assert!(p["name"].as_str().unwrap().starts_with(&format!("eps={}", cfg["eps"])));
    }
    assert_eq!(code(&o), 1);

    let o = bin(&["sweep", "--config", cfg.to_str().unwrap(), "--param", "eps", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = bin(&["sweep", "--config", cfg.to_str().unwrap(), "--param", "eps=-1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_expansion() {
    let p = parse_param("eps=0.2, 0.5").unwrap();
    assert_eq!(p.values, [json!(0.2), json!(0.5)]);
    assert!(parse_param("=1").is_err());
    assert!(parse_param("eps=").is_err());
    let mut c = config(0.5);
    c["t_end"] = json!(4.0);
    let points = expand(&c, &[p, parse_param("t_end=5,6").unwrap()]).unwrap();
    let names: Vec<&str> = points.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["eps=0.2_t_end=5", "eps=0.2_t_end=6", "eps=0.5_t_end=5", "eps=0.5_t_end=6"]);
    assert_eq!(points[3].1.t_end, 6.0);
    assert!(expand(&c, &[parse_param("grid.nope.x=1").unwrap()]).is_err());
}

#[test]
fn quick_criteria_helpers() {
    let c = free_propagator_oracle();
    assert!(c.pass, "{c:?}");
    let c = dispersive_estimate();
    assert!(c.pass, "{c:?}");
}

#[test]
fn coarse_quadrature_cross_check() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(&coarse_config(), dir.path(), false).unwrap();
    assert!(outcome.abort.is_none());
    let QuadratureReport::Samples { samples, .. } = quadrature_report(&outcome.series).unwrap() else {
        panic!("coarse grid is eligible");
    };
    assert_eq!(samples.len(), 3);
    for q in &samples {
        assert!(q.rel_error < 5e-2, "{q:?}");
        assert!(q.bound_dominates);
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = modscatter::rundir::load_config(&path).unwrap();
        modscatter::rundir::validate_config(&config).unwrap();
        n += 1;
    }
    assert!(n >= 3);
}
