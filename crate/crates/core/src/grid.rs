//! Periodic lattices `[-L/2, L/2)^n` and their DFT duals.
//!
//! Both lattices use centered indexing: index `j` on axis `a` sits at
//! `x = (j - N/2) dx` and index `k` at `xi = (k - N/2) dxi`, with
//! `dxi = 2 pi / L`. Values are stored row-major, last axis fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;
pub const MIN_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    dim: usize,
    points: [usize; MAX_DIM],
    length: [f64; MAX_DIM],
}

/// Serialized form of a [`Grid`]: one entry per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: Vec<usize>,
    pub length: Vec<f64>,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Grid> {
        Grid::new(&spec.points, &spec.length)
    }
}

impl From<Grid> for GridSpec {
    fn from(grid: Grid) -> GridSpec {
        GridSpec {
            points: grid.shape().to_vec(),
            length: grid.lengths().to_vec(),
        }
    }
}

impl Grid {
    pub fn new(points: &[usize], length: &[f64]) -> Result<Grid> {
        let dim = points.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if length.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} box lengths given for {dim} axes",
                length.len()
            )));
        }
        let mut p = [1; MAX_DIM];
        let mut l = [1.0; MAX_DIM];
        for a in 0..dim {
            if points[a] < MIN_POINTS || !points[a].is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "points per axis must be a power of two >= {MIN_POINTS}, got {}",
                    points[a]
                )));
            }
            if !(length[a].is_finite() && length[a] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "box length must be positive, got {}",
                    length[a]
                )));
            }
            p[a] = points[a];
            l[a] = length[a];
        }
        Ok(Grid {
            dim,
            points: p,
            length: l,
        })
    }

    /// Same number of points and box length on every axis.
    pub fn cubic(dim: usize, points: usize, length: f64) -> Result<Grid> {
        Grid::new(&vec![points; dim], &vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.points[..self.dim]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.length[..self.dim]
    }

    /// Total number of lattice sites.
    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self, axis: usize) -> f64 {
        self.length[axis] / self.points[axis] as f64
    }

    pub fn dxi(&self, axis: usize) -> f64 {
        2.0 * std::f64::consts::PI / self.length[axis]
    }

    pub fn nyquist(&self, axis: usize) -> f64 {
        std::f64::consts::PI / self.dx(axis)
    }

    /// Volume element of the spatial lattice.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.dx(a)).product()
    }

    /// Volume element of the frequency lattice.
    pub fn freq_cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.dxi(a)).product()
    }

    /// Centered coordinate of lattice index `j` on `axis`.
    pub fn x(&self, axis: usize, j: usize) -> f64 {
        (j as f64 - (self.points[axis] / 2) as f64) * self.dx(axis)
    }

    pub fn xi(&self, axis: usize, k: usize) -> f64 {
        (k as f64 - (self.points[axis] / 2) as f64) * self.dxi(axis)
    }

    /// Per-axis coordinate vectors of the spatial lattice.
    pub fn x_axes(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|a| (0..self.points[a]).map(|j| self.x(a, j)).collect())
            .collect()
    }

    pub fn xi_axes(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|a| (0..self.points[a]).map(|k| self.xi(a, k)).collect())
            .collect()
    }

    /// `|x|^2` at every site, in storage order.
    pub fn radius_sq(&self) -> Vec<f64> {
        squared_radius(&self.x_axes(), self.shape())
    }

    /// `|xi|^2` at every site of the frequency lattice, in storage order.
    pub fn freq_radius_sq(&self) -> Vec<f64> {
        squared_radius(&self.xi_axes(), self.shape())
    }

    /// `|xi|^2` in natural (unshifted) FFT order, for multipliers applied
    /// between raw transforms.
    pub fn natural_freq_radius_sq(&self) -> Vec<f64> {
        squared_radius(&self.natural_freq_axes(), self.shape())
    }

    pub fn natural_freq_axes(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|a| natural_axis(self.points[a], self.dxi(a)))
            .collect()
    }

    /// Multi-index of a flat storage offset.
    pub fn unflatten(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.points[a];
            flat /= self.points[a];
        }
        idx
    }

    /// Flat offset of the origin `x = 0` (index `N/2` on every axis).
    pub fn origin_index(&self) -> usize {
        let mut flat = 0;
        for a in 0..self.dim {
            flat = flat * self.points[a] + self.points[a] / 2;
        }
        flat
    }

    /// Whether a flat offset touches any face of the box.
    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] == self.points[a] - 1)
    }
}

/// Frequencies `k' * spacing` in natural DFT order.
pub(crate) fn natural_axis(n: usize, spacing: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            signed * spacing
        })
        .collect()
}

pub(crate) fn squared_radius(axes: &[Vec<f64>], shape: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; shape.iter().product()];
    let mut stride = out.len();
    for (a, coords) in axes.iter().enumerate() {
        let n = shape[a];
        stride /= n;
        for (flat, r2) in out.iter_mut().enumerate() {
            let c = coords[(flat / stride) % n];
            *r2 += c * c;
        }
    }
    out
}
