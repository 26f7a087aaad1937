//! Band-limited evaluation of a lattice spectrum off the lattice.
//!
//! The discrete-time Fourier transform of the samples,
//! `g_hat(xi) = (2 pi)^{-n/2} dx^n sum_j g_j exp(-i x_j . xi)`, is the
//! trigonometric interpolant of the DFT. On a rescaled lattice
//! `xi_m = (m - N/2) h` it is evaluated for all `m` at once with a chirp-z
//! (Bluestein) convolution.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::Result;
use crate::field::{ComplexField, Space};
use crate::fourier::plan;

/// Evaluates the spectrum of a physical-space field at `xi_m = scale * x_m`
/// on every axis. Points beyond the Nyquist frequency of the source lattice
/// get zero (the interpolant is band-limited).
pub fn spectrum_at_scaled(field: &ComplexField, scale: f64) -> Result<Vec<Complex64>> {
    field.expect_space(Space::Physical)?;
    let grid = field.grid;
    let shape = grid.shape().to_vec();
    let mut values = field.values.clone();
    for axis in 0..grid.dim() {
        let n = shape[axis];
        let dx = grid.dx(axis);
        let chirp = Chirp::new(n, dx * dx * scale);
        let nyq = grid.nyquist(axis);
        let inside: Vec<bool> = (0..n)
            .map(|m| (grid.x(axis, m) * scale).abs() <= nyq * (1.0 + 1e-12))
            .collect();
        for_each_line(&shape, axis, &mut values, |line| {
            chirp.apply(line);
            for (z, &keep) in line.iter_mut().zip(&inside) {
                if !keep {
                    *z = Complex64::default();
                }
            }
        });
    }
    let norm = grid.cell_volume() * (2.0 * PI).powf(-(grid.dim() as f64) / 2.0);
    values.iter_mut().for_each(|z| *z *= norm);
    Ok(values)
}

/// Evaluates a frequency-space field, viewed as samples of a band-limited
/// function, at `xi_m = scale * x_m`.
pub fn interpolate_spectrum(field: &ComplexField, scale: f64) -> Result<Vec<Complex64>> {
    field.expect_space(Space::Frequency)?;
    let physical = crate::fourier::inverse_transform(field)?;
    spectrum_at_scaled(&physical, scale)
}

/// `y_M = sum_J c_J exp(-i a J M)` for centered `J, M in [-N/2, N/2)`.
struct Chirp {
    n: usize,
    a: f64,
    kernel_hat: Vec<Complex64>,
}

impl Chirp {
    fn new(n: usize, a: f64) -> Self {
        let p = 2 * n;
        let mut kernel = vec![Complex64::default(); p];
        for d in 0..n as i64 {
            let w = Complex64::from_polar(1.0, chirp_phase(a, d));
            kernel[d as usize] = w;
            if d > 0 {
                kernel[p - d as usize] = w;
            }
        }
        plan(p, FftDirection::Forward).process(&mut kernel);
        Chirp {
            n,
            a,
            kernel_hat: kernel,
        }
    }

    fn apply(&self, line: &mut [Complex64]) {
        let n = self.n;
        let p = 2 * n;
        let half = (n / 2) as i64;
        let mut buf = vec![Complex64::default(); p];
        for (j, &c) in line.iter().enumerate() {
            buf[j] = c * Complex64::from_polar(1.0, -chirp_phase(self.a, j as i64 - half));
        }
        plan(p, FftDirection::Forward).process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        plan(p, FftDirection::Inverse).process(&mut buf);
        let inv = 1.0 / p as f64;
        for (m, out) in line.iter_mut().enumerate() {
            *out = buf[m] * inv * Complex64::from_polar(1.0, -chirp_phase(self.a, m as i64 - half));
        }
    }
}

/// `a d^2 / 2` reduced modulo 2 pi.
fn chirp_phase(a: f64, d: i64) -> f64 {
    let d2 = (d * d) as f64;
    (0.5 * a * d2) % (2.0 * PI)
}

/// Runs `f` on every 1D line of `values` along `axis`.
pub(crate) fn for_each_line(
    shape: &[usize],
    axis: usize,
    values: &mut [Complex64],
    mut f: impl FnMut(&mut [Complex64]),
) {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![Complex64::default(); n];
    for o in 0..outer {
        for i in 0..stride {
            let base = o * n * stride + i;
            for j in 0..n {
                line[j] = values[base + j * stride];
            }
            f(&mut line);
            for j in 0..n {
                values[base + j * stride] = line[j];
            }
        }
    }
}
