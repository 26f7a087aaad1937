//! The free Schrödinger flow `e^{i t Delta / 2}` and its large-time
//! factorization.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::fourier::FftNd;
use crate::interp::spectrum_at_scaled;
use crate::reduce::pairwise_map;

/// Applies the multiplier `exp(-i t |xi|^2 / 2)`; the result stays in the
/// input's space and its time is advanced by `t_delta`.
pub fn free_propagate(field: &ComplexField, t_delta: f64) -> Result<ComplexField> {
    field.check_finite()?;
    let grid = field.grid;
    let mut out = field.clone();
    out.time = field.time + t_delta;
    if t_delta == 0.0 {
        return Ok(out);
    }
    match field.space {
        Space::Frequency => {
            for (z, k2) in out.values.iter_mut().zip(grid.freq_radius_sq()) {
                *z *= Complex64::from_polar(1.0, -0.5 * t_delta * k2);
            }
        }
        Space::Physical => {
            let fft = FftNd::for_grid(&grid);
            fft.forward(&mut out.values);
            let inv = 1.0 / grid.len() as f64;
            for (z, k2) in out.values.iter_mut().zip(grid.natural_freq_radius_sq()) {
                *z *= Complex64::from_polar(inv, -0.5 * t_delta * k2);
            }
            fft.inverse(&mut out.values);
        }
    }
    Ok(out)
}

/// Leading term of the free flow at time `t`:
/// `(i t)^{-n/2} exp(i |x|^2 / (2t)) g_hat(x / t)`.
pub fn free_asymptotic(g: &ComplexField, t: f64) -> Result<ComplexField> {
    g.expect_space(Space::Physical)?;
    g.check_finite()?;
    if !(t >= 1.0) {
        return Err(Error::Rejected(format!(
            "asymptotic factorization needs t >= 1, got {t}"
        )));
    }
    let grid = g.grid;
    let spectrum = spectrum_at_scaled(g, 1.0 / t)?;
    let values = spectrum
        .into_iter()
        .zip(grid.radius_sq())
        .map(|(s, r2)| asymptotic_prefactor(grid.dim(), t, r2) * s)
        .collect();
    Ok(ComplexField {
        grid,
        values,
        time: g.time + t,
        space: Space::Physical,
    })
}

/// `(i t)^{-n/2} exp(i r^2 / (2t))` with the principal branch of the root.
pub fn asymptotic_prefactor(dim: usize, t: f64, r2: f64) -> Complex64 {
    let n = dim as f64;
    Complex64::from_polar(t.powf(-n / 2.0), -PI * n / 4.0 + r2 / (2.0 * t))
}

/// Riemann-sum L^p norm; `p = f64::INFINITY` gives the sup norm.
pub fn lp_norm(field: &ComplexField, p: f64) -> f64 {
    if p.is_infinite() {
        return field.sup_norm();
    }
    let s = pairwise_map(&field.values, &|z| z.norm().powf(p)) * field.measure();
    s.powf(1.0 / p)
}

/// Hölder conjugate of `p`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// `||e^{i t Delta/2} g||_p t^{n(1/2 - 1/p)} / ||g||_{p'}`.
pub fn dispersive_check(g: &ComplexField, t: f64, p: f64) -> Result<f64> {
    g.expect_space(Space::Physical)?;
    if !(t > 0.0) {
        return Err(Error::Rejected(format!("dispersive check needs t > 0, got {t}")));
    }
    if !(p >= 2.0) {
        return Err(Error::Rejected(format!("p must lie in [2, inf], got {p}")));
    }
    let denom = lp_norm(g, conjugate_exponent(p));
    if denom == 0.0 {
        return Err(Error::Rejected("input has zero L^p' norm".into()));
    }
    let evolved = free_propagate(g, t)?;
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let n = g.grid.dim() as f64;
    Ok(lp_norm(&evolved, p) * t.powf(n * (0.5 - inv_p)) / denom)
}
