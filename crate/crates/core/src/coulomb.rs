//! Convolution with `|x|^{-1}` in 2 and 3 dimensions as a Fourier multiplier.
//!
//! `F(|x|^{-1}) = C_1 |xi|^{-(n-1)}` with
//! `C_1 = 2^{n/2 - 1} pi^{-1/2} Gamma((n-1)/2)`, so on the lattice
//! `|x|^{-1} * rho = IDFT[(2 pi)^{n/2} C_1 |xi|^{-(n-1)} DFT[rho]]`.
//! The singular zero mode takes the average of `|xi|^{-(n-1)}` over its
//! frequency cell.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::fourier::FftNd;
use crate::grid::{natural_axis, squared_radius};

/// `C_1` of the Coulomb transform pair.
pub fn coulomb_constant(dim: usize) -> Result<f64> {
    let n = dim as f64;
    let gamma = match dim {
        2 => PI.sqrt(), // Gamma(1/2)
        3 => 1.0,       // Gamma(1)
        _ => {
            return Err(Error::Rejected(format!(
                "Coulomb multiplier needs n in {{2, 3}}, got {dim}"
            )))
        }
    };
    Ok(2f64.powf(n / 2.0 - 1.0) / PI.sqrt() * gamma)
}

/// `(2 pi)^{n/2} C_1`: 2 pi in 2D, 4 pi in 3D.
pub fn multiplier_prefactor(dim: usize) -> Result<f64> {
    Ok((2.0 * PI).powf(dim as f64 / 2.0) * coulomb_constant(dim)?)
}

/// Mean of `|k|^{-(n-1)}` over the box `prod [-h_a/2, h_a/2]`.
pub fn cell_average(cell: &[f64]) -> Result<f64> {
    match cell.len() {
        2 => {
            let (a, b) = (cell[0] / 2.0, cell[1] / 2.0);
            let d = a.hypot(b);
            // four quadrants, each split into two right triangles at the origin
            let integral = 4.0 * (a * ((d + b) / a).ln() + b * ((d + a) / b).ln());
            Ok(integral / (cell[0] * cell[1]))
        }
        3 => {
            let h = [cell[0] / 2.0, cell[1] / 2.0, cell[2] / 2.0];
            // six pyramids with apex at the origin, one per face
            let mut integral = 0.0;
            for axis in 0..3 {
                let a = h[axis];
                let b = h[(axis + 1) % 3];
                let c = h[(axis + 2) % 3];
                integral += 2.0 * a * face_integral(a, b, c);
            }
            Ok(integral / (cell[0] * cell[1] * cell[2]))
        }
        n => Err(Error::Rejected(format!(
            "Coulomb multiplier needs n in {{2, 3}}, got {n}"
        ))),
    }
}

/// `int_{-b}^{b} int_{-c}^{c} dy dz / (a^2 + y^2 + z^2)` with the inner
/// integral done in closed form and the outer by composite Simpson.
fn face_integral(a: f64, b: f64, c: f64) -> f64 {
    let inner = |y: f64| {
        let r = (a * a + y * y).sqrt();
        2.0 / r * (c / r).atan()
    };
    let n = 4096;
    let h = 2.0 * b / n as f64;
    let mut s = inner(-b) + inner(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * inner(-b + i as f64 * h);
    }
    s * h / 3.0
}

/// Precomputed Coulomb convolution on a lattice with the given shape and
/// sample spacing.
pub struct CoulombKernel {
    multiplier: Vec<f64>,
    fft: FftNd,
    work: RefCell<Vec<Complex64>>,
}

impl CoulombKernel {
    pub fn new(shape: &[usize], spacing: &[f64]) -> Result<Self> {
        let dim = shape.len();
        let prefactor = multiplier_prefactor(dim)?;
        let dual: Vec<f64> = shape
            .iter()
            .zip(spacing)
            .map(|(&n, &h)| 2.0 * PI / (n as f64 * h))
            .collect();
        let axes: Vec<Vec<f64>> = shape
            .iter()
            .zip(&dual)
            .map(|(&n, &d)| natural_axis(n, d))
            .collect();
        let power = (dim as f64 - 1.0) / 2.0;
        let len: usize = shape.iter().product();
        let mut multiplier: Vec<f64> = squared_radius(&axes, shape)
            .into_iter()
            .map(|k2| prefactor * k2.powf(-power))
            .collect();
        multiplier[0] = prefactor * cell_average(&dual)?;
        let inv = 1.0 / len as f64;
        multiplier.iter_mut().for_each(|m| *m *= inv);
        Ok(CoulombKernel {
            multiplier,
            fft: FftNd::new(shape),
            work: RefCell::new(vec![Complex64::default(); len]),
        })
    }

    /// Kernel for densities sampled on the field's own lattice
    /// (physical spacing `dx`, or `dxi` for frequency-space fields).
    pub fn for_field(field: &ComplexField) -> Result<Self> {
        let g = field.grid;
        let spacing: Vec<f64> = (0..g.dim())
            .map(|a| match field.space {
                Space::Physical => g.dx(a),
                Space::Frequency => g.dxi(a),
            })
            .collect();
        CoulombKernel::new(g.shape(), &spacing)
    }

    /// `|x|^{-1} * density`; also returns the largest imaginary residue
    /// relative to the largest real value.
    pub fn convolve(&self, density: &[f64], out: &mut [f64]) -> f64 {
        let mut work = self.work.borrow_mut();
        for (w, &d) in work.iter_mut().zip(density) {
            *w = Complex64::new(d, 0.0);
        }
        self.fft.forward(&mut work);
        for (w, &m) in work.iter_mut().zip(&self.multiplier) {
            *w *= m;
        }
        self.fft.inverse(&mut work);
        let mut max_re: f64 = 0.0;
        let mut max_im: f64 = 0.0;
        for (o, w) in out.iter_mut().zip(work.iter()) {
            *o = w.re;
            max_re = max_re.max(w.re.abs());
            max_im = max_im.max(w.im.abs());
        }
        if max_re > 0.0 {
            max_im / max_re
        } else {
            max_im
        }
    }

    /// `|x|^{-1} * |v|^2` for samples `v`.
    pub fn convolve_modulus_sq(&self, values: &[Complex64], out: &mut [f64]) -> f64 {
        let density: Vec<f64> = values.iter().map(|z| z.norm_sqr()).collect();
        self.convolve(&density, out)
    }
}

/// `V = |x|^{-1} * |u|^2`, returned as a real-valued physical field.
pub fn hartree_potential(u: &ComplexField) -> Result<ComplexField> {
    u.expect_space(Space::Physical)?;
    u.check_finite()?;
    let kernel = CoulombKernel::for_field(u)?;
    let mut v = vec![0.0; u.values.len()];
    kernel.convolve_modulus_sq(&u.values, &mut v);
    Ok(ComplexField {
        grid: u.grid,
        values: v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        time: u.time,
        space: Space::Physical,
    })
}
