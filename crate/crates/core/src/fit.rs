//! Least-squares exponent fits in log-log coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub samples: usize,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Rejected("regressor and response differ in length".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite sample".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("regressor has zero variance".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        samples: n,
    })
}

/// Fits `v ~ C t^p`; returns the fit of `log v` against `log t`.
pub fn power_law_fit(t: &[f64], v: &[f64]) -> Result<LinearFit> {
    if v.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::DegenerateFit("power law needs positive samples".into()));
    }
    let lt: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    linear_fit(&lt, &lv)
}

/// Removes `2 pi` jumps from a phase sequence.
pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (i, &p) in phase.iter().enumerate() {
        if i > 0 {
            let d = p - phase[i - 1];
            offset -= tau * (d / tau).round();
        }
        out.push(p + offset);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let t: Vec<f64> = (0..12).map(|k| 10.0 * 1.15f64.powi(k)).collect();
        let v2: Vec<f64> = t.iter().map(|t| 3.0 / (t * t)).collect();
        let f = power_law_fit(&t, &v2).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
        let v1: Vec<f64> = t.iter().map(|t| 0.1 / t).collect();
        assert!((power_law_fit(&t, &v1).unwrap().slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(linear_fit(&[1.0], &[1.0]), Err(Error::InsufficientData { .. })));
        assert!(matches!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::DegenerateFit(_))));
        assert!(matches!(power_law_fit(&[1.0, 2.0], &[0.0, 1.0]), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn stderr_of_noisy_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.1, 0.9, 2.1, 2.9];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 0.96).abs() < 1e-12);
        // ssr = 0.032, sxx = 5
        assert!((f.slope_stderr - (0.032f64 / 2.0 / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unwraps_steady_rotation() {
        let raw: Vec<f64> = (0..50)
            .map(|k| {
                let p = -0.4 * k as f64;
                p - 2.0 * std::f64::consts::PI * ((p + std::f64::consts::PI) / (2.0 * std::f64::consts::PI)).floor()
            })
            .collect();
        let u = unwrap_phase(&raw);
        for (k, p) in u.iter().enumerate() {
            assert!((p + 0.4 * k as f64).abs() < 1e-12);
        }
    }
}
