use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    /// `i u_t + u_xx / 2 = |u|^2 u` on the line.
    Nls1d,
    /// `i u_t + Delta u / 2 = (|x|^{-1} * |u|^2) u` in the plane.
    Hartree2d,
    Hartree3d,
}

impl Equation {
    pub fn dim(self) -> usize {
        match self {
            Equation::Nls1d => 1,
            Equation::Hartree2d => 2,
            Equation::Hartree3d => 3,
        }
    }

    pub fn is_hartree(self) -> bool {
        !matches!(self, Equation::Nls1d)
    }

    /// Weighted-norm order `floor(n/2) + 1`.
    pub fn weight_order(self) -> u32 {
        (self.dim() / 2 + 1) as u32
    }

    pub fn default_dt(self) -> f64 {
        match self {
            Equation::Nls1d => 5e-3,
            _ => 1e-2,
        }
    }
}

/// Shape of the data `u_*`, scaled by `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialShape {
    /// `exp(-|x|^2 / (2 w^2))`
    Gaussian {
        #[serde(default = "unit")]
        width: f64,
    },
    /// `exp(-(|x| / w)^4 / 2)`
    Supergaussian {
        #[serde(default = "unit")]
        width: f64,
    },
    /// A `.cf` file holding `u_*` in physical space on the run's grid.
    CustomFile { path: PathBuf },
}

fn unit() -> f64 {
    1.0
}

fn default_t_start() -> f64 {
    1.0
}

fn default_ratio() -> f64 {
    1.15
}

fn default_leak() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub equation: Equation,
    pub grid: Grid,
    #[serde(default = "default_t_start")]
    pub t_start: f64,
    pub t_end: f64,
    /// Defaults to [`Equation::default_dt`].
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_ratio")]
    pub snapshot_ratio: f64,
    pub eps: f64,
    pub initial_shape: InitialShape,
    #[serde(default = "default_leak")]
    pub leak_threshold: f64,
    /// Test hook: drop the nonlinearity so the run is the free flow.
    #[serde(default)]
    pub linear_only: bool,
}

/// Fraction of `||u_hat_*||_2^2` defining the effective frequency support.
pub const SUPPORT_FRACTION: f64 = 0.9999;
/// Required `L / (xi_max T_end)` on every axis.
pub const BOX_FACTOR: f64 = 4.0;

impl SimConfig {
    pub fn new(equation: Equation, grid: Grid, t_end: f64, eps: f64) -> Self {
        SimConfig {
            equation,
            grid,
            t_start: 1.0,
            t_end,
            dt: None,
            snapshot_ratio: default_ratio(),
            eps,
            initial_shape: InitialShape::Gaussian { width: 1.0 },
            leak_threshold: default_leak(),
            linear_only: false,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.equation.default_dt())
    }

    pub fn weight_order(&self) -> u32 {
        self.equation.weight_order()
    }

    /// Coefficient of the nonlinearity: 1, or 0 under the linear test hook.
    pub fn coupling(&self) -> f64 {
        if self.linear_only {
            0.0
        } else {
            1.0
        }
    }

    /// Checks everything that does not need the initial data.
    pub fn validate_static(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.grid.dim() != self.equation.dim() {
            return bad(format!(
                "{:?} needs a {}-dimensional grid, got {}",
                self.equation,
                self.equation.dim(),
                self.grid.dim()
            ));
        }
        if !(self.t_start >= 1.0 && self.t_start.is_finite()) {
            return bad(format!("t_start must be >= 1, got {}", self.t_start));
        }
        if !(self.t_end > self.t_start && self.t_end.is_finite()) {
            return bad(format!(
                "t_end must exceed t_start = {}, got {}",
                self.t_start, self.t_end
            ));
        }
        let dt = self.dt();
        if !(dt > 0.0 && dt <= 0.01) {
            return bad(format!("dt must lie in (0, 0.01], got {dt}"));
        }
        if !(self.snapshot_ratio > 1.0 && self.snapshot_ratio.is_finite()) {
            return bad(format!(
                "snapshot_ratio must exceed 1, got {}",
                self.snapshot_ratio
            ));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be finite and >= 0, got {}", self.eps));
        }
        if !(self.leak_threshold > 0.0) {
            return bad(format!(
                "leak_threshold must be positive, got {}",
                self.leak_threshold
            ));
        }
        match self.initial_shape {
            InitialShape::Gaussian { width } | InitialShape::Supergaussian { width }
                if !(width > 0.0 && width.is_finite()) =>
            {
                bad(format!("shape width must be positive, got {width}"))
            }
            _ => Ok(()),
        }
    }

    /// Full validation including the no-wrap box rule
    /// `L >= 4 xi_max T_end` on every axis.
    pub fn validate(&self, u_star: &ComplexField) -> Result<()> {
        self.validate_static()?;
        if u_star.grid != self.grid {
            return Err(Error::InvalidConfig(
                "initial data lives on a different grid".into(),
            ));
        }
        let xi_max = effective_support(u_star)?;
        for (axis, &l) in self.grid.lengths().iter().enumerate() {
            let need = BOX_FACTOR * xi_max * self.t_end;
            if l < need {
                return Err(Error::InvalidConfig(format!(
                    "box length {l} on axis {axis} is below {BOX_FACTOR} * xi_max * t_end = {need:.6} \
                     (xi_max = {xi_max:.6}); dispersion would wrap around"
                )));
            }
        }
        Ok(())
    }

    /// Geometric snapshot times `t_start r^k` below `t_end`, then `t_end`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut times = Vec::new();
        let mut k = 0;
        loop {
            let t = self.t_start * self.snapshot_ratio.powi(k);
            if t >= self.t_end * (1.0 - 1e-9) {
                break;
            }
            times.push(t);
            k += 1;
        }
        times.push(self.t_end);
        times
    }
}

/// Frequency radius holding [`SUPPORT_FRACTION`] of `||u_hat||_2^2`.
pub fn effective_support(u: &ComplexField) -> Result<f64> {
    u.expect_space(Space::Physical)?;
    let hat = crate::fourier::forward_transform(u)?;
    let r2 = hat.grid.freq_radius_sq();
    let mut weights: Vec<(f64, f64)> = r2
        .into_iter()
        .zip(&hat.values)
        .map(|(r2, z)| (r2, z.norm_sqr()))
        .collect();
    let total: f64 = crate::reduce::pairwise_map(&weights, &|w| w.1);
    if total == 0.0 {
        return Ok(0.0);
    }
    weights.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (r2, w) in weights {
        acc += w;
        if acc >= SUPPORT_FRACTION * total {
            return Ok(r2.sqrt());
        }
    }
    Ok(hat.grid.freq_radius_sq().into_iter().fold(0.0, f64::max).sqrt())
}
