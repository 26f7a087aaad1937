//! Splitting `d/dt f_hat` into the stationary-phase term and the remainder.
//!
//! `d/dt f_hat = -i e^{it|xi|^2/2} F[g(u)]` is evaluated exactly from the
//! solution. The leading term is `-(i/t) N(f_hat) f_hat`, with
//! `N = |f_hat|^2` (NLS) or `|xi|^{-1} * |f_hat|^2` (Hartree), and the
//! remainder is the difference.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::config::Equation;
use crate::coulomb::CoulombKernel;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::fit::power_law_fit;
use crate::scattering::{profile_hat, Estimate, PhaseDensity};

/// The equation whose nonlinearity acts on fields of this dimension.
pub fn equation_for_dim(dim: usize) -> Result<Equation> {
    match dim {
        1 => Ok(Equation::Nls1d),
        2 => Ok(Equation::Hartree2d),
        3 => Ok(Equation::Hartree3d),
        n => Err(Error::Rejected(format!("no equation in dimension {n}"))),
    }
}

/// `g(u)` scaled by `coupling`, in physical space.
pub fn nonlinearity(u: &ComplexField, coupling: f64) -> Result<ComplexField> {
    u.expect_space(Space::Physical)?;
    u.check_finite()?;
    let mut g = u.clone();
    if equation_for_dim(u.grid.dim())?.is_hartree() {
        let mut v = vec![0.0; u.values.len()];
        CoulombKernel::for_field(u)?.convolve_modulus_sq(&u.values, &mut v);
        for (z, v) in g.values.iter_mut().zip(v) {
            *z *= coupling * v;
        }
    } else {
        for z in g.values.iter_mut() {
            *z *= coupling * z.norm_sqr();
        }
    }
    Ok(g)
}

/// `d/dt f_hat(t) = -i e^{it|xi|^2/2} F[g(u(t))]`.
pub fn dtf_hat(u: &ComplexField, t: f64, coupling: f64) -> Result<ComplexField> {
    let g = nonlinearity(u, coupling)?;
    let mut out = profile_hat(&g, t)?;
    out.values.iter_mut().for_each(|z| *z *= Complex64::new(0.0, -1.0));
    Ok(out)
}

/// `-(i/t) N(f_hat) f_hat`.
pub fn leading_term(f_hat: &ComplexField, t: f64, equation: Equation) -> Result<ComplexField> {
    f_hat.expect_space(Space::Frequency)?;
    if t < 1.0 {
        return Err(Error::Rejected(format!("leading term needs t >= 1, got {t}")));
    }
    if equation.dim() != f_hat.grid.dim() {
        return Err(Error::Rejected(format!(
            "{equation:?} does not act on a {}-dimensional field",
            f_hat.grid.dim()
        )));
    }
    let n = PhaseDensity::new(&f_hat.grid, equation)?.eval(&f_hat.values);
    let mut out = f_hat.clone();
    for (z, n) in out.values.iter_mut().zip(n) {
        *z *= Complex64::new(0.0, -n / t);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ResonanceSample {
    pub t: f64,
    pub dtf_hat: ComplexField,
    pub leading: ComplexField,
    pub remainder: ComplexField,
    pub leading_sup: f64,
    pub remainder_sup: f64,
}

/// `R = d/dt f_hat - leading`. The leading term always carries unit
/// coupling; `coupling` only scales the exact derivative.
pub fn remainder(u: &ComplexField, t: f64, coupling: f64) -> Result<ResonanceSample> {
    let equation = equation_for_dim(u.grid.dim())?;
    let d = dtf_hat(u, t, coupling)?;
    let leading = leading_term(&profile_hat(u, t)?, t, equation)?;
    let mut r = d.clone();
    for (z, l) in r.values.iter_mut().zip(&leading.values) {
        *z -= l;
    }
    Ok(ResonanceSample {
        t,
        leading_sup: leading.sup_norm(),
        remainder_sup: r.sup_norm(),
        dtf_hat: d,
        leading,
        remainder: r,
    })
}

pub const MIN_FIT_SAMPLES: usize = 8;

/// Exponent `p` of `sup ~ t^p` over `(t, sup)` pairs.
pub fn sup_exponent_fit(points: &[(f64, f64)]) -> Result<Estimate> {
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            got: points.len(),
        });
    }
    let (t, v): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let fit = power_law_fit(&t, &v)?;
    Ok(Estimate {
        value: fit.slope,
        stderr: fit.slope_stderr,
        samples: fit.samples,
    })
}

/// Decay exponent of `||R(t)||_inf`.
pub fn remainder_fit(samples: &[ResonanceSample]) -> Result<Estimate> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.remainder_sup)).collect();
    sup_exponent_fit(&pts)
}

/// Decay exponent of the leading term.
pub fn leading_fit(samples: &[ResonanceSample]) -> Result<Estimate> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.leading_sup)).collect();
    sup_exponent_fit(&pts)
}

pub const MAX_QUADRATURE_POINTS: usize = 128;
/// Mass fraction of `f` kept by the quadrature window.
pub const QUADRATURE_MASS: f64 = 1.0 - 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureValue {
    pub r: Complex64,
    /// Upper bound for `|R|` from `|e^{-ia} - 1| <= 2^{1-delta}|a|^delta`.
    pub bound: f64,
}

/// `R(s, xi)` from the explicit kernel: with
/// `K(a, b) = (2 pi)^{-1/2} e^{i xi (a + b)} int e^{-i x xi} f(x - a) conj(f(x)) f(x - b) dx`,
/// `R = -(i/s)(2 pi)^{-1} iint (e^{-i a b / s} - 1) K(a, b) da db`.
/// Riemann sums over lattice shifts; `f` is restricted to the smallest
/// centered window holding [`QUADRATURE_MASS`] of its `L^2` mass.
pub fn remainder_quadrature(f: &ComplexField, s: f64, xi: f64, delta: f64) -> Result<QuadratureValue> {
    f.expect_space(Space::Physical)?;
    f.check_finite()?;
    if f.grid.dim() != 1 {
        return Err(Error::Rejected("remainder quadrature is one-dimensional".into()));
    }
    let n = f.values.len();
    if n > MAX_QUADRATURE_POINTS {
        return Err(Error::Rejected(format!(
            "remainder quadrature needs N <= {MAX_QUADRATURE_POINTS}, got {n}"
        )));
    }
    if s < 1.0 {
        return Err(Error::Rejected(format!("quadrature needs s >= 1, got {s}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Rejected(format!("delta must lie in (0, 1), got {delta}")));
    }
    let grid = f.grid;
    let h = grid.dx(0);
    let (lo, hi) = mass_window(&f.values);
    let inside = |j: isize| j >= lo as isize && j <= hi as isize;
    let vals = &f.values;
    let x: Vec<f64> = (0..n).map(|j| grid.x(0, j)).collect();
    let span = (hi - lo) as isize;

    // Inner x-integrals for every shift pair (a, b) = (p h, q h).
    let mut r = Complex64::default();
    let mut bound = 0.0;
    for p in -span..=span {
        let a = p as f64 * h;
        for q in -span..=span {
            let b = q as f64 * h;
            let mut k = Complex64::default();
            let mut k_abs = 0.0;
            for j in lo..=hi {
                let (ja, jb) = (j as isize - p, j as isize - q);
                if !inside(ja) || !inside(jb) {
                    continue;
                }
                let prod = vals[ja as usize] * vals[j].conj() * vals[jb as usize];
                k += prod * Complex64::from_polar(1.0, -x[j] * xi);
                k_abs += prod.norm();
            }
            if k_abs == 0.0 {
                continue;
            }
            let kernel = k * Complex64::from_polar(h, xi * (a + b));
            let phase = Complex64::from_polar(1.0, -a * b / s) - 1.0;
            r += phase * kernel;
            bound += (a.abs() * b.abs()).powf(delta) * k_abs * h;
        }
    }
    let area = h * h;
    let c = (2.0 * PI).powf(-1.5);
    let r = Complex64::new(0.0, -1.0 / s) * c * area * r;
    let bound = c * 2f64.powf(1.0 - delta) * s.powf(-1.0 - delta) * area * bound;
    Ok(QuadratureValue { r, bound })
}

/// Smallest index window `[lo, hi]`, grown symmetrically about the mass
/// peak, that holds [`QUADRATURE_MASS`] of `sum |v|^2`.
fn mass_window(v: &[Complex64]) -> (usize, usize) {
    let w: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return (0, v.len() - 1);
    }
    let peak = (0..w.len()).fold(0, |b, i| if w[i] > w[b] { i } else { b });
    let (mut lo, mut hi) = (peak, peak);
    let mut acc = w[peak];
    while acc < QUADRATURE_MASS * total {
        let left = (lo > 0).then(|| w[lo - 1]);
        let right = (hi + 1 < w.len()).then(|| w[hi + 1]);
        match (left, right) {
            (Some(l), Some(r)) if l >= r => {
                lo -= 1;
                acc += l;
            }
            (_, Some(r)) => {
                hi += 1;
                acc += r;
            }
            (Some(l), None) => {
                lo -= 1;
                acc += l;
            }
            (None, None) => break,
        }
    }
    (lo, hi)
}
