use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::reduce::pairwise_map;

/// Which lattice the samples live on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Physical,
    Frequency,
}

/// Complex samples of `u`, `f`, `f_hat` or `w_hat` at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub time: f64,
    pub space: Space,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>, time: f64, space: Space) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(ComplexField {
            grid,
            values,
            time,
            space,
        })
    }

    pub fn zeros(grid: Grid, time: f64, space: Space) -> Self {
        ComplexField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            time,
            space,
        }
    }

    /// Samples `f` at the lattice coordinates of `space` (x or xi).
    pub fn from_fn(
        grid: Grid,
        time: f64,
        space: Space,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Self {
        let axes = match space {
            Space::Physical => grid.x_axes(),
            Space::Frequency => grid.xi_axes(),
        };
        let dim = grid.dim();
        let mut coord = vec![0.0; dim];
        let values = (0..grid.len())
            .map(|flat| {
                let idx = grid.unflatten(flat);
                for a in 0..dim {
                    coord[a] = axes[a][idx[a]];
                }
                f(&coord)
            })
            .collect();
        ComplexField {
            grid,
            values,
            time,
            space,
        }
    }

    pub fn expect_space(&self, space: Space) -> Result<()> {
        if self.space != space {
            return Err(Error::WrongSpace {
                expected: space,
                found: self.space,
            });
        }
        Ok(())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Lattice volume element matching the field's space.
    pub fn measure(&self) -> f64 {
        match self.space {
            Space::Physical => self.grid.cell_volume(),
            Space::Frequency => self.grid.freq_cell_volume(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Riemann-sum L2 norm.
    pub fn l2_norm(&self) -> f64 {
        (pairwise_map(&self.values, &|z| z.norm_sqr()) * self.measure()).sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> ComplexField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|z| *z *= c);
        out
    }

    /// Largest pointwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}
