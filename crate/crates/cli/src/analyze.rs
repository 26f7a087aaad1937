//! Reports derived from a snapshot series: `scattering.json` (+ `W.cf`),
//! `fits.csv`, `resonance.csv` and `quadrature.json`.

use std::collections::BTreeMap;
use std::path::Path;

use modscatter_core::cf;
use modscatter_core::evolution::SnapshotSeries;
use modscatter_core::resonance::{remainder, remainder_quadrature, sup_exponent_fit, MAX_QUADRATURE_POINTS};
use modscatter_core::scattering::{
    asymptotic_residual, extract_scattering, peak_index, xt_report, AnalysisOptions, Estimate,
    ScatteringReport, ScatteringSummary, XtReport,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::rundir::{cell, load_run, write_json, write_text};

pub const SCATTERING_FILE: &str = "scattering.json";
pub const W_FILE: &str = "W.cf";
pub const FITS_FILE: &str = "fits.csv";
pub const RESONANCE_FILE: &str = "resonance.csv";
pub const QUADRATURE_FILE: &str = "quadrature.json";

/// Growth allowance `alpha` used for the reported X_T norm.
pub const XT_ALPHA: f64 = 0.1;
pub const QUADRATURE_DELTA: f64 = 0.25;
/// Frequency samples of the quadrature cross-check, as lattice offsets from
/// the spectral peak.
pub const QUADRATURE_OFFSETS: [isize; 3] = [0, 3, -5];

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceRow {
    pub time: f64,
    pub leading_sup: f64,
    pub remainder_sup: f64,
    /// `NaN` when the leading term vanishes.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceSummary {
    pub remainder_fit: Option<Estimate>,
    pub leading_fit: Option<Estimate>,
    pub final_ratio: Option<f64>,
    pub degenerate: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureRow {
    pub s: f64,
    pub xi: f64,
    pub r_quad: [f64; 2],
    pub r_residual: [f64; 2],
    pub remainder_sup: f64,
    /// `|R_quad - R_residual| / max(||R_residual||_inf, 1e-14)`
    pub rel_error: f64,
    pub bound_value: f64,
    pub bound_dominates: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum QuadratureReport {
    Samples { delta: f64, samples: Vec<QuadratureRow> },
    Skipped { skipped: String },
}

#[derive(Serialize)]
struct ScatteringFile<'a> {
    w_file: &'a str,
    phi: &'a [Option<f64>],
    summary: &'a ScatteringSummary,
    resonance: &'a ResonanceSummary,
    residual: &'a [(f64, f64)],
    xt: &'a XtReport,
}

pub struct Analysis {
    pub scattering: ScatteringReport,
    pub resonance_rows: Vec<ResonanceRow>,
    pub resonance: ResonanceSummary,
    pub residual: Vec<(f64, f64)>,
    pub xt: XtReport,
    pub quadrature: QuadratureReport,
}

/// Snapshots entering the fits: past the transient, without a leak-flagged
/// final snapshot.
fn fit_window(series: &SnapshotSeries, transient: f64) -> impl Iterator<Item = usize> + '_ {
    let end = series.snapshots.len() - usize::from(series.leak_flagged());
    (0..end).filter(move |&k| series.snapshots[k].time >= transient)
}

pub fn resonance_rows(series: &SnapshotSeries) -> CliResult<Vec<ResonanceRow>> {
    let coupling = series.config.coupling();
    series
        .snapshots
        .iter()
        .map(|s| {
            let r = remainder(&s.u, s.time, coupling).map_err(CliError::Analysis)?;
            let ratio = if r.leading_sup > 0.0 {
                r.remainder_sup / r.leading_sup
            } else {
                f64::NAN
            };
            Ok(ResonanceRow {
                time: s.time,
                leading_sup: r.leading_sup,
                remainder_sup: r.remainder_sup,
                ratio,
            })
        })
        .collect()
}

pub fn resonance_summary(
    series: &SnapshotSeries,
    rows: &[ResonanceRow],
    transient: f64,
) -> ResonanceSummary {
    let window: Vec<&ResonanceRow> = fit_window(series, transient).map(|k| &rows[k]).collect();
    let mut degenerate = BTreeMap::new();
    let mut fit = |name: &str, pick: fn(&ResonanceRow) -> f64| {
        let pts: Vec<(f64, f64)> = window.iter().map(|r| (r.time, pick(r))).collect();
        match sup_exponent_fit(&pts) {
            Ok(e) => Some(e),
            Err(e) => {
                degenerate.insert(name.to_string(), e.to_string());
                None
            }
        }
    };
    let remainder_fit = fit("remainder", |r| r.remainder_sup);
    let leading_fit = fit("leading", |r| r.leading_sup);
    let final_ratio = window.last().map(|r| r.ratio).filter(|r| r.is_finite());
    ResonanceSummary {
        remainder_fit,
        leading_fit,
        final_ratio,
        degenerate,
    }
}

/// Cross-checks the residual remainder against the explicit-kernel
/// quadrature at the snapshots nearest `t_end / 2`, `3 t_end / 4` and
/// `t_end`, one frequency offset from the peak each.
pub fn quadrature_report(series: &SnapshotSeries) -> CliResult<QuadratureReport> {
    let grid = series.config.grid;
    if grid.dim() != 1 || grid.len() > MAX_QUADRATURE_POINTS {
        return Ok(QuadratureReport::Skipped {
            skipped: format!(
                "quadrature runs on one-dimensional grids with at most {MAX_QUADRATURE_POINTS} points"
            ),
        });
    }
    let t_end = series.last().time;
    let peak = peak_index(&series.snapshots[0].f_hat) as isize;
    let n = grid.len() as isize;
    let mut samples = Vec::new();
    for (target, offset) in [0.5, 0.75, 1.0].into_iter().zip(QUADRATURE_OFFSETS) {
        let snap = series
            .snapshots
            .iter()
            .min_by(|a, b| {
                let da = (a.time - target * t_end).abs();
                let db = (b.time - target * t_end).abs();
                da.total_cmp(&db)
            })
            .expect("series is never empty");
        let k = (peak + offset).clamp(0, n - 1) as usize;
        let xi = grid.xi(0, k);
        let res = remainder(&snap.u, snap.time, series.config.coupling()).map_err(CliError::Analysis)?;
        let f = snap.profile().map_err(CliError::Analysis)?;
        let q = remainder_quadrature(&f, snap.time, xi, QUADRATURE_DELTA).map_err(CliError::Analysis)?;
        let r_res = res.remainder.values[k];
        samples.push(QuadratureRow {
            s: snap.time,
            xi,
            r_quad: [q.r.re, q.r.im],
            r_residual: [r_res.re, r_res.im],
            remainder_sup: res.remainder_sup,
            rel_error: (q.r - r_res).norm() / res.remainder_sup.max(1e-14),
            bound_value: q.bound,
            bound_dominates: q.r.norm() <= q.bound,
        });
    }
    Ok(QuadratureReport::Samples {
        delta: QUADRATURE_DELTA,
        samples,
    })
}

pub fn analyze_series(series: &SnapshotSeries) -> CliResult<Analysis> {
    let options = AnalysisOptions::for_equation(series.config.equation);
    let scattering = extract_scattering(series, &options).map_err(CliError::Analysis)?;
    let resonance_rows = resonance_rows(series)?;
    let resonance = resonance_summary(series, &resonance_rows, options.transient);
    let residual = asymptotic_residual(series, &scattering).map_err(CliError::Analysis)?;
    Ok(Analysis {
        xt: xt_report(series, XT_ALPHA),
        quadrature: quadrature_report(series)?,
        scattering,
        resonance_rows,
        resonance,
        residual,
    })
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

pub fn fits_csv(report: &ScatteringReport) -> String {
    let mut out = String::from("time,linf,cauchy_diff_w,cauchy_diff_f,weighted_norm,arg_peak\n");
    for r in &report.rows {
        let row = [
            cell(r.time),
            cell(r.linf),
            opt_cell(r.cauchy_diff_w),
            opt_cell(r.cauchy_diff_f),
            cell(r.weighted_norm),
            cell(r.arg_peak),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn resonance_csv(rows: &[ResonanceRow]) -> String {
    let mut out = String::from("time,leading_sup,remainder_sup,ratio\n");
    for r in rows {
        let row = [r.time, r.leading_sup, r.remainder_sup, r.ratio].map(cell);
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_reports(analysis: &Analysis, dir: &Path) -> CliResult<()> {
    let w_path = dir.join(W_FILE);
    cf::write_file(&analysis.scattering.w, &w_path).map_err(|e| CliError::RunDir {
        path: w_path.clone(),
        msg: e.to_string(),
    })?;
    let file = ScatteringFile {
        w_file: W_FILE,
        phi: &analysis.scattering.phi,
        summary: &analysis.scattering.summary,
        resonance: &analysis.resonance,
        residual: &analysis.residual,
        xt: &analysis.xt,
    };
    write_json(&dir.join(SCATTERING_FILE), &file)?;
    write_text(&dir.join(FITS_FILE), &fits_csv(&analysis.scattering))?;
    write_text(&dir.join(RESONANCE_FILE), &resonance_csv(&analysis.resonance_rows))?;
    write_json(&dir.join(QUADRATURE_FILE), &analysis.quadrature)
}

/// Reads a run directory and writes the reports next to its snapshots.
pub fn analyze_dir(dir: &Path) -> CliResult<Analysis> {
    let (series, _) = load_run(dir)?;
    let analysis = analyze_series(&series)?;
    write_reports(&analysis, dir)?;
    Ok(analysis)
}
