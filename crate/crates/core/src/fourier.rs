//! Discrete Fourier transforms on [`Grid`]s.
//!
//! The scaled transforms realize
//! `g_hat(xi) = (2 pi)^{-n/2} \int e^{-i x.xi} g(x) dx` as a Riemann sum on the
//! centered lattices, so the continuum identities
//! `F(f * g) = (2 pi)^{n/2} F(f) F(g)` carry over with the same constants.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::Result;
use crate::field::{ComplexField, Space};
use crate::grid::Grid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Lines gathered per batch when transforming along a strided axis.
const BATCH: usize = 16;

/// Unnormalized n-dimensional FFT over a row-major buffer.
pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    work: RefCell<Vec<Complex64>>,
    scratch: RefCell<Vec<Complex64>>,
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let forward: Vec<_> = shape.iter().map(|&n| plan(n, FftDirection::Forward)).collect();
        let inverse: Vec<_> = shape.iter().map(|&n| plan(n, FftDirection::Inverse)).collect();
        let scratch_len = forward
            .iter()
            .chain(&inverse)
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let max_line = shape.iter().copied().max().unwrap_or(0);
        FftNd {
            shape: shape.to_vec(),
            forward,
            inverse,
            work: RefCell::new(vec![Complex64::default(); BATCH * max_line]),
            scratch: RefCell::new(vec![Complex64::default(); scratch_len]),
        }
    }

    pub fn for_grid(grid: &Grid) -> Self {
        FftNd::new(grid.shape())
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.process(buf, FftDirection::Forward);
    }

    /// Unnormalized inverse: `inverse(forward(x)) = len() * x`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.process(buf, FftDirection::Inverse);
    }

    fn process(&self, buf: &mut [Complex64], direction: FftDirection) {
        assert_eq!(buf.len(), self.len(), "buffer does not match FFT shape");
        let plans = match direction {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        let mut scratch = self.scratch.borrow_mut();
        let mut work = self.work.borrow_mut();
        let dim = self.shape.len();
        for axis in 0..dim {
            let n = self.shape[axis];
            let fft = &plans[axis];
            if axis == dim - 1 {
                fft.process_with_scratch(buf, &mut scratch);
                continue;
            }
            let stride: usize = self.shape[axis + 1..].iter().product();
            let outer: usize = self.shape[..axis].iter().product();
            for o in 0..outer {
                let base = o * n * stride;
                let mut i0 = 0;
                while i0 < stride {
                    let lines = BATCH.min(stride - i0);
                    let w = &mut work[..lines * n];
                    for j in 0..n {
                        let row = base + j * stride + i0;
                        for b in 0..lines {
                            w[b * n + j] = buf[row + b];
                        }
                    }
                    fft.process_with_scratch(w, &mut scratch);
                    for j in 0..n {
                        let row = base + j * stride + i0;
                        for b in 0..lines {
                            buf[row + b] = w[b * n + j];
                        }
                    }
                    i0 += lines;
                }
            }
        }
    }
}

/// Multiplies by `(-1)^(j_1 + ... + j_n)`, which moves between centered and
/// natural DFT ordering (every axis length is divisible by four).
pub(crate) fn checkerboard(shape: &[usize], values: &mut [Complex64]) {
    let last = *shape.last().expect("non-empty shape");
    for (row, chunk) in values.chunks_mut(last).enumerate() {
        // parity of the leading indices of this row
        let mut rest = row;
        let mut parity = 0;
        for &n in shape[..shape.len() - 1].iter().rev() {
            parity += rest % n;
            rest /= n;
        }
        let start = parity % 2;
        for z in chunk.iter_mut().skip(1 - start).step_by(2) {
            *z = -*z;
        }
    }
}

/// Scaled forward transform of a physical-space field.
pub fn forward_transform(field: &ComplexField) -> Result<ComplexField> {
    field.expect_space(Space::Physical)?;
    field.check_finite()?;
    let grid = field.grid;
    let mut values = field.values.clone();
    transform_in_place(&grid, &mut values, Space::Physical);
    Ok(ComplexField {
        grid,
        values,
        time: field.time,
        space: Space::Frequency,
    })
}

/// Scaled inverse transform of a frequency-space field.
pub fn inverse_transform(field: &ComplexField) -> Result<ComplexField> {
    field.expect_space(Space::Frequency)?;
    field.check_finite()?;
    let grid = field.grid;
    let mut values = field.values.clone();
    transform_in_place(&grid, &mut values, Space::Frequency);
    Ok(ComplexField {
        grid,
        values,
        time: field.time,
        space: Space::Physical,
    })
}

/// Applies the scaled transform leaving `from`.
pub(crate) fn transform_in_place(grid: &Grid, values: &mut [Complex64], from: Space) {
    let fft = FftNd::for_grid(grid);
    let n = grid.dim() as f64;
    checkerboard(grid.shape(), values);
    let scale = match from {
        Space::Physical => {
            fft.forward(values);
            grid.cell_volume() * (2.0 * PI).powf(-n / 2.0)
        }
        Space::Frequency => {
            fft.inverse(values);
            grid.freq_cell_volume() * (2.0 * PI).powf(-n / 2.0)
        }
    };
    checkerboard(grid.shape(), values);
    values.iter_mut().for_each(|z| *z *= scale);
}

/// Transform to the other space, whichever that is.
pub fn transform(field: &ComplexField) -> Result<ComplexField> {
    match field.space {
        Space::Physical => forward_transform(field),
        Space::Frequency => inverse_transform(field),
    }
}
