//! Profiles, the phase correction `B`, the modified profile and the
//! scattering diagnostics extracted from a snapshot series.

use std::collections::BTreeMap;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Equation;
use crate::coulomb::CoulombKernel;
use crate::error::{Error, Result};
use crate::evolution::SnapshotSeries;
use crate::field::{ComplexField, Space};
use crate::fit::{linear_fit, power_law_fit, unwrap_phase, LinearFit};
use crate::fourier::forward_transform;
use crate::grid::Grid;
use crate::interp::interpolate_spectrum;
use crate::propagator::asymptotic_prefactor;

/// `f_hat(t, xi) = exp(i t |xi|^2 / 2) u_hat(t, xi)`.
pub fn profile_hat(u: &ComplexField, t: f64) -> Result<ComplexField> {
    u.expect_space(Space::Physical)?;
    let mut hat = forward_transform(u)?;
    for (z, k2) in hat.values.iter_mut().zip(hat.grid.freq_radius_sq()) {
        *z *= Complex64::from_polar(1.0, 0.5 * t * k2);
    }
    hat.time = t;
    Ok(hat)
}

/// Integrand of `B` without the `1/s`: `|f_hat|^2` (NLS) or
/// `|xi|^{-1} * |f_hat|^2` on the frequency lattice (Hartree).
pub struct PhaseDensity {
    kernel: Option<CoulombKernel>,
}

impl PhaseDensity {
    pub fn new(grid: &Grid, equation: Equation) -> Result<Self> {
        let kernel = if equation.is_hartree() {
            let spacing: Vec<f64> = (0..grid.dim()).map(|a| grid.dxi(a)).collect();
            Some(CoulombKernel::new(grid.shape(), &spacing)?)
        } else {
            None
        };
        Ok(PhaseDensity { kernel })
    }

    pub fn eval(&self, f_hat: &[Complex64]) -> Vec<f64> {
        match &self.kernel {
            None => f_hat.iter().map(|z| z.norm_sqr()).collect(),
            Some(k) => {
                let mut out = vec![0.0; f_hat.len()];
                k.convolve_modulus_sq(f_hat, &mut out);
                out
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct PhaseField {
    pub grid: Grid,
    pub b: Vec<f64>,
    pub t: f64,
    pub equation: Equation,
}

/// `B` at every snapshot time, by the trapezoid rule in `log s` starting
/// from zero at the first snapshot.
pub fn phase_history(series: &SnapshotSeries) -> Result<Vec<PhaseField>> {
    if series.snapshots.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: series.snapshots.len(),
        });
    }
    let grid = series.config.grid;
    let equation = series.config.equation;
    let density = PhaseDensity::new(&grid, equation)?;
    let mut out = Vec::with_capacity(series.snapshots.len());
    let mut b = vec![0.0; grid.len()];
    let mut prev: Option<(f64, Vec<f64>)> = None;
    for s in &series.snapshots {
        let d = density.eval(&s.f_hat.values);
        if let Some((t0, d0)) = &prev {
            let h = 0.5 * (s.time / t0).ln();
            for ((b, x0), x1) in b.iter_mut().zip(d0).zip(&d) {
                *b += h * (x0 + x1);
            }
        }
        out.push(PhaseField {
            grid,
            b: b.clone(),
            t: s.time,
            equation,
        });
        prev = Some((s.time, d));
    }
    Ok(out)
}

fn snapshot_index(series: &SnapshotSeries, t: f64) -> Result<usize> {
    series
        .snapshots
        .iter()
        .position(|s| (s.time - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| Error::Rejected(format!("t = {t} is not a snapshot time")))
}

/// `B(t, xi) = int_{t_start}^t |f_hat(s, xi)|^2 ds / s` (or its Hartree
/// counterpart), where `t` must be a snapshot time.
pub fn phase_b(series: &SnapshotSeries, t: f64) -> Result<PhaseField> {
    let k = snapshot_index(series, t)?;
    if k == 0 && series.snapshots.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: 1 });
    }
    let mut all = phase_history(series)?;
    Ok(all.swap_remove(k))
}

fn modify(f_hat: &ComplexField, b: &[f64], coupling: f64) -> ComplexField {
    let mut w = f_hat.clone();
    for (z, &b) in w.values.iter_mut().zip(b) {
        *z *= Complex64::from_polar(1.0, coupling * b);
    }
    w
}

/// `w_hat(t) = f_hat(t) exp(i B(t))`, with `B` scaled by the run's
/// nonlinear coupling.
pub fn modified_profile(series: &SnapshotSeries, t: f64) -> Result<ComplexField> {
    let k = snapshot_index(series, t)?;
    let b = phase_b(series, t)?;
    Ok(modify(&series.snapshots[k].f_hat, &b.b, series.config.coupling()))
}

/// Estimate with its least-squares standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    fn slope(fit: LinearFit) -> Self {
        Estimate {
            value: fit.slope,
            stderr: fit.slope_stderr,
            samples: fit.samples,
        }
    }

    fn neg_slope(fit: LinearFit) -> Self {
        Estimate {
            value: -fit.slope,
            ..Estimate::slope(fit)
        }
    }
}

/// Fit windows and thresholds for [`extract_scattering`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Snapshots before this time are transient and excluded from fits.
    pub transient: f64,
    /// Start of the sup-norm decay window.
    pub decay_start: f64,
    /// Start of the phase-drift window.
    pub drift_start: f64,
    pub decay_tolerance: f64,
    pub delta_range: (f64, f64),
    /// Last modified Cauchy difference must be below this times `||u_hat_*||_inf`.
    pub cauchy_final_fraction: f64,
    pub separation: f64,
    pub drift_tolerance: f64,
    pub alpha_max: f64,
}

impl AnalysisOptions {
    pub fn for_equation(equation: Equation) -> Self {
        let hartree = equation.is_hartree();
        AnalysisOptions {
            transient: 10.0,
            decay_start: if hartree { 20.0 } else { 50.0 },
            drift_start: if hartree { 20.0 } else { 10.0 },
            decay_tolerance: if hartree { 0.10 } else { 0.05 },
            delta_range: (0.1, 0.5),
            cauchy_final_fraction: 0.02,
            separation: 2.0,
            drift_tolerance: 0.10,
            alpha_max: 0.15,
        }
    }
}

/// Per-snapshot regression inputs. The Cauchy differences at row `k` are
/// between snapshots `k` and `k + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub time: f64,
    pub linf: f64,
    pub cauchy_diff_w: Option<f64>,
    pub cauchy_diff_f: Option<f64>,
    pub weighted_norm: f64,
    pub arg_peak: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSummary {
    pub equation: Equation,
    pub window: (f64, f64),
    pub xi_peak: Vec<f64>,
    pub u_star_sup: f64,
    pub w_sup: f64,
    pub w_peak_abs: f64,
    pub decay_exponent_fit: Option<Estimate>,
    pub delta_fit: Option<Estimate>,
    pub alpha_fit: Option<Estimate>,
    pub phase_slope: Option<Estimate>,
    pub predicted_phase_slope: f64,
    pub drift_match: Option<f64>,
    pub cauchy_w_final: Option<f64>,
    pub cauchy_w_max: Option<f64>,
    pub cauchy_f_max: Option<f64>,
    /// Fits that could not be formed, with the reason.
    pub degenerate: BTreeMap<String, String>,
    pub pass_flags: BTreeMap<String, bool>,
}

#[derive(Clone, Debug)]
pub struct ScatteringReport {
    /// `w_hat` at the last usable snapshot.
    pub w: ComplexField,
    /// `arg W - arg u_hat_*` in `(-pi, pi]`, `None` where `|W| < 0.05 ||W||_inf`.
    pub phi: Vec<Option<f64>>,
    pub summary: ScatteringSummary,
    pub rows: Vec<FitRow>,
    pub phases: Vec<PhaseField>,
}

/// Index of `max |g|`, ties broken by smaller `|xi|`, then lexicographically.
pub fn peak_index(g: &ComplexField) -> usize {
    let r2 = g.grid.freq_radius_sq();
    let mut best = 0;
    for i in 1..g.values.len() {
        let (a, b) = (g.values[i].norm(), g.values[best].norm());
        if a > b || (a == b && r2[i] < r2[best]) {
            best = i;
        }
    }
    best
}

/// Reduces an angle to `(-pi, pi]`.
pub fn principal_angle(a: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let r = a - tau * (a / tau).round();
    if r <= -std::f64::consts::PI {
        r + tau
    } else {
        r
    }
}

fn fit_or_note<T>(
    degenerate: &mut BTreeMap<String, String>,
    name: &str,
    r: Result<T>,
) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            degenerate.insert(name.to_string(), e.to_string());
            None
        }
    }
}

const PHI_AMPLITUDE_CUTOFF: f64 = 0.05;
const MIN_WINDOW: usize = 8;
/// Cauchy differences below this fraction of `||u_hat_*||_inf` are roundoff.
const ROUNDOFF_FLOOR: f64 = 1e-12;

pub fn extract_scattering(
    series: &SnapshotSeries,
    options: &AnalysisOptions,
) -> Result<ScatteringReport> {
    let snaps = &series.snapshots;
    let mut last = snaps.len();
    if series.leak_flagged() {
        last -= 1;
    }
    let window: Vec<usize> = (0..last)
        .filter(|&k| snaps[k].time >= options.transient)
        .collect();
    if window.len() < MIN_WINDOW {
        return Err(Error::InsufficientData {
            needed: MIN_WINDOW,
            got: window.len(),
        });
    }
    let equation = series.config.equation;
    let coupling = series.config.coupling();
    let phases = phase_history(series)?;
    let w_hats: Vec<ComplexField> = snaps
        .iter()
        .zip(&phases)
        .map(|(s, b)| modify(&s.f_hat, &b.b, coupling))
        .collect();
    let k_end = last - 1;
    let w = w_hats[k_end].clone();
    let u_star = &snaps[0].f_hat;
    let u_star_sup = u_star.sup_norm();
    let w_sup = w.sup_norm();

    let phi: Vec<Option<f64>> = w
        .values
        .iter()
        .zip(&u_star.values)
        .map(|(w_, u)| {
            (w_sup > 0.0 && w_.norm() >= PHI_AMPLITUDE_CUTOFF * w_sup)
                .then(|| principal_angle(w_.arg() - u.arg()))
        })
        .collect();

    let peak = peak_index(u_star);
    let grid = series.config.grid;
    let idx = grid.unflatten(peak);
    let xi_peak: Vec<f64> = (0..grid.dim()).map(|a| grid.xi(a, idx[a])).collect();

    let times = series.times();
    let diffs = |fields: Vec<&ComplexField>| -> Vec<Option<f64>> {
        (0..snaps.len())
            .map(|k| (k + 1 < last).then(|| fields[k + 1].max_abs_diff(fields[k])))
            .collect()
    };
    let diff_w = diffs(w_hats.iter().collect());
    let diff_f = diffs(snaps.iter().map(|s| &s.f_hat).collect());
    let raw_arg: Vec<f64> = snaps.iter().map(|s| s.f_hat.values[peak].arg()).collect();
    let arg_peak = unwrap_phase(&raw_arg);
    let rows: Vec<FitRow> = (0..snaps.len())
        .map(|k| FitRow {
            time: times[k],
            linf: series.norm_table[k].linf,
            cauchy_diff_w: diff_w[k],
            cauchy_diff_f: diff_f[k],
            weighted_norm: series.norm_table[k].hdot_0m,
            arg_peak: arg_peak[k],
        })
        .collect();

    let mut degenerate = BTreeMap::new();
    let pick = |from: f64, f: &dyn Fn(&FitRow) -> Option<f64>| -> (Vec<f64>, Vec<f64>) {
        window
            .iter()
            .filter(|&&k| times[k] >= from)
            .filter_map(|&k| f(&rows[k]).map(|v| (times[k], v)))
            .unzip()
    };
    let (t, v) = pick(options.decay_start, &|r| Some(r.linf));
    let decay = fit_or_note(&mut degenerate, "decay", power_law_fit(&t, &v)).map(Estimate::slope);
    let (t, v) = pick(options.transient, &|r| r.cauchy_diff_w);
    let floor = ROUNDOFF_FLOOR * u_star_sup;
    let delta = if v.iter().all(|&d| d <= floor) {
        degenerate.insert("delta".into(), "Cauchy differences at roundoff".into());
        None
    } else {
        fit_or_note(&mut degenerate, "delta", power_law_fit(&t, &v)).map(Estimate::neg_slope)
    };
    let (t, v) = pick(options.transient, &|r| Some(r.weighted_norm));
    let alpha = fit_or_note(&mut degenerate, "alpha", power_law_fit(&t, &v)).map(Estimate::slope);

    let predicted = {
        let d = PhaseDensity::new(&grid, equation)?.eval(&w.values);
        -coupling * d[peak]
    };
    let (t, v) = pick(options.drift_start, &|r| Some(r.arg_peak));
    let phase_slope = if predicted == 0.0 {
        degenerate.insert("phase".into(), "predicted drift rate is zero".into());
        None
    } else {
        let lt: Vec<f64> = t.iter().map(|t| t.ln()).collect();
        fit_or_note(&mut degenerate, "phase", linear_fit(&lt, &v)).map(Estimate::slope)
    };
    let drift_match = phase_slope.map(|s| ((s.value - predicted) / predicted).abs());

    let window_max = |f: &dyn Fn(&FitRow) -> Option<f64>| {
        window
            .iter()
            .filter_map(|&k| f(&rows[k]))
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let cauchy_w_max = window_max(&|r| r.cauchy_diff_w);
    let cauchy_f_max = window_max(&|r| r.cauchy_diff_f);
    let cauchy_w_final = window.iter().rev().find_map(|&k| rows[k].cauchy_diff_w);

    let half_dim = grid.dim() as f64 / 2.0;
    let mut pass = BTreeMap::new();
    pass.insert(
        "decay".to_string(),
        decay.is_some_and(|d| (d.value + half_dim).abs() <= options.decay_tolerance),
    );
    pass.insert(
        "delta_range".to_string(),
        delta.is_some_and(|d| d.value >= options.delta_range.0 && d.value <= options.delta_range.1),
    );
    pass.insert(
        "cauchy_final".to_string(),
        cauchy_w_final.is_some_and(|c| c < options.cauchy_final_fraction * u_star_sup),
    );
    pass.insert(
        "separation".to_string(),
        matches!((cauchy_w_max, cauchy_f_max), (Some(w), Some(f)) if f > 0.0 && f >= options.separation * w),
    );
    let w_diffs: Vec<f64> = window.iter().filter_map(|&k| rows[k].cauchy_diff_w).collect();
    pass.insert(
        "cauchy_decreasing".to_string(),
        w_diffs.len() >= 2 && w_diffs.last() < w_diffs.first(),
    );
    pass.insert(
        "drift".to_string(),
        drift_match.is_some_and(|d| d <= options.drift_tolerance),
    );
    pass.insert(
        "alpha".to_string(),
        alpha.is_some_and(|a| a.value < options.alpha_max),
    );

    let summary = ScatteringSummary {
        equation,
        window: (times[window[0]], times[*window.last().unwrap()]),
        xi_peak,
        u_star_sup,
        w_sup,
        w_peak_abs: w.values[peak].norm(),
        decay_exponent_fit: decay,
        delta_fit: delta,
        alpha_fit: alpha,
        phase_slope,
        predicted_phase_slope: predicted,
        drift_match,
        cauchy_w_final,
        cauchy_w_max,
        cauchy_f_max,
        degenerate,
        pass_flags: pass,
    };
    Ok(ScatteringReport {
        w,
        phi,
        summary,
        rows,
        phases,
    })
}

/// `t^{n/2} || u(t) - (it)^{-n/2} e^{i|x|^2/2t} W(x/t) e^{-iB(t, x/t)} ||_inf`
/// at every snapshot.
pub fn asymptotic_residual(
    series: &SnapshotSeries,
    report: &ScatteringReport,
) -> Result<Vec<(f64, f64)>> {
    let coupling = series.config.coupling();
    let grid = series.config.grid;
    let r2 = grid.radius_sq();
    let half_dim = grid.dim() as f64 / 2.0;
    let mut out = Vec::with_capacity(series.snapshots.len());
    for (s, b) in series.snapshots.iter().zip(&report.phases) {
        let t = s.time;
        let target = modify(&report.w, &b.b, -coupling);
        let at = interpolate_spectrum(&target, 1.0 / t)?;
        let worst = s
            .u
            .values
            .iter()
            .zip(&at)
            .zip(&r2)
            .map(|((u, g), &r2)| (u - asymptotic_prefactor(grid.dim(), t, r2) * g).norm())
            .fold(0.0, f64::max);
        out.push((t, t.powf(half_dim) * worst));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XtRow {
    pub time: f64,
    pub decay: f64,
    pub hdot_m0: f64,
    pub hdot_0m: f64,
    pub l2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XtReport {
    pub alpha: f64,
    pub rows: Vec<XtRow>,
    pub sup_decay: f64,
    pub sup_hdot_m0: f64,
    pub sup_hdot_0m: f64,
    pub sup_l2: f64,
    pub total: f64,
    pub data_size: f64,
    /// `(||u||_X - size) / ||u||_X^3`, the constant in the cubic a priori
    /// bound; `None` for the zero solution.
    pub cubic_shape: Option<f64>,
}

/// The `X_T` norm components `t^{n/2}||u||_inf`, `t^{-alpha}||u||_{H^{m,0}}`,
/// `t^{-alpha}||f||_{H^{0,m}}` and `||u||_2`, each with its sup over the run.
pub fn xt_report(series: &SnapshotSeries, alpha: f64) -> XtReport {
    let half_dim = series.config.grid.dim() as f64 / 2.0;
    let rows: Vec<XtRow> = series
        .norm_table
        .iter()
        .map(|n| {
            let w = n.time.powf(-alpha);
            XtRow {
                time: n.time,
                decay: n.time.powf(half_dim) * n.linf,
                hdot_m0: w * n.hdot_m0,
                hdot_0m: w * n.hdot_0m,
                l2: n.l2,
            }
        })
        .collect();
    let sup = |f: fn(&XtRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let (a, b, c, d) = (
        sup(|r| r.decay),
        sup(|r| r.hdot_m0),
        sup(|r| r.hdot_0m),
        sup(|r| r.l2),
    );
    let total = a + b + c + d;
    XtReport {
        alpha,
        rows,
        sup_decay: a,
        sup_hdot_m0: b,
        sup_hdot_0m: c,
        sup_l2: d,
        total,
        data_size: series.initial_size,
        cubic_shape: (total > 0.0).then(|| (total - series.initial_size) / total.powi(3)),
    }
}
