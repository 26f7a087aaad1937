//! Strang-split time stepping for `i u_t + Delta u / 2 = g(u)`.
//!
//! Both substeps are solved exactly: the kinetic one by the Fourier
//! multiplier `exp(-i tau |xi|^2 / 2)`, the nonlinear one by the pointwise
//! rotation `u exp(-i tau N(|u|))` with `N = |u|^2` (NLS) or
//! `N = |x|^{-1} * |u|^2` (Hartree). The rotation leaves `|u|` unchanged,
//! so `N` is constant along it.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;

use crate::config::{Equation, InitialShape, SimConfig};
use crate::coulomb::CoulombKernel;
use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::fourier::{inverse_transform, FftNd};
use crate::norms::{compute_norms, data_norm, NormReport};
use crate::propagator::free_propagate;
use crate::scattering::profile_hat;

/// Reusable split-step integrator for one grid and equation.
pub struct Stepper {
    equation: Equation,
    coupling: f64,
    fft: FftNd,
    k2: Vec<f64>,
    coulomb: Option<CoulombKernel>,
    potential: RefCell<Vec<f64>>,
    density: RefCell<Vec<f64>>,
    multipliers: RefCell<Vec<(f64, Vec<Complex64>)>>,
}

const CACHED_MULTIPLIERS: usize = 4;

impl Stepper {
    pub fn new(grid: &crate::Grid, equation: Equation, coupling: f64) -> Result<Self> {
        if grid.dim() != equation.dim() {
            return Err(Error::Rejected(format!(
                "{equation:?} needs a {}-dimensional grid",
                equation.dim()
            )));
        }
        let coulomb = if equation.is_hartree() {
            let spacing: Vec<f64> = (0..grid.dim()).map(|a| grid.dx(a)).collect();
            Some(CoulombKernel::new(grid.shape(), &spacing)?)
        } else {
            None
        };
        Ok(Stepper {
            equation,
            coupling,
            fft: FftNd::for_grid(grid),
            k2: grid.natural_freq_radius_sq(),
            coulomb,
            potential: RefCell::new(vec![0.0; grid.len()]),
            density: RefCell::new(vec![0.0; grid.len()]),
            multipliers: RefCell::new(Vec::new()),
        })
    }

    pub fn for_config(config: &SimConfig) -> Result<Self> {
        Stepper::new(&config.grid, config.equation, config.coupling())
    }

    pub fn equation(&self) -> Equation {
        self.equation
    }

    /// Exact free flow over `tau`.
    pub fn kinetic(&self, u: &mut [Complex64], tau: f64) {
        if tau == 0.0 {
            return;
        }
        self.fft.forward(u);
        let mut cache = self.multipliers.borrow_mut();
        let pos = cache.iter().position(|(t, _)| *t == tau);
        let pos = match pos {
            Some(p) => p,
            None => {
                let inv = 1.0 / u.len() as f64;
                let m = self
                    .k2
                    .iter()
                    .map(|&k2| Complex64::from_polar(inv, -0.5 * tau * k2))
                    .collect();
                if cache.len() == CACHED_MULTIPLIERS {
                    cache.remove(0);
                }
                cache.push((tau, m));
                cache.len() - 1
            }
        };
        for (z, m) in u.iter_mut().zip(&cache[pos].1) {
            *z *= m;
        }
        drop(cache);
        self.fft.inverse(u);
    }

    /// Exact nonlinear rotation over `tau`.
    pub fn nonlinear(&self, u: &mut [Complex64], tau: f64) {
        let c = self.coupling * tau;
        if c == 0.0 {
            return;
        }
        match &self.coulomb {
            None => {
                for z in u.iter_mut() {
                    *z *= Complex64::from_polar(1.0, -c * z.norm_sqr());
                }
            }
            Some(kernel) => {
                let mut density = self.density.borrow_mut();
                let mut v = self.potential.borrow_mut();
                for (d, z) in density.iter_mut().zip(u.iter()) {
                    *d = z.norm_sqr();
                }
                kernel.convolve(&density, &mut v);
                for (z, &p) in u.iter_mut().zip(v.iter()) {
                    *z *= Complex64::from_polar(1.0, -c * p);
                }
            }
        }
    }

    /// One kinetic-potential-kinetic step.
    pub fn step(&self, u: &mut [Complex64], dt: f64) {
        self.kinetic(u, 0.5 * dt);
        self.nonlinear(u, dt);
        self.kinetic(u, 0.5 * dt);
    }

    /// Advances from `t_from` to `t_to` with steps of `dt`, shortening the
    /// last one to land exactly. Adjacent kinetic half steps are merged.
    /// Returns the number of steps taken.
    pub fn advance(&self, u: &mut [Complex64], t_from: f64, t_to: f64, dt: f64) -> usize {
        let span = t_to - t_from;
        if span <= 0.0 {
            return 0;
        }
        let mut full = (span / dt).floor() as usize;
        let mut rest = span - full as f64 * dt;
        if rest < 1e-9 * dt {
            rest = 0.0;
        } else if dt - rest < 1e-9 * dt {
            full += 1;
            rest = 0.0;
        }
        let steps: Vec<f64> = std::iter::repeat_n(dt, full)
            .chain((rest > 0.0).then_some(rest))
            .collect();
        if steps.is_empty() {
            return 0;
        }
        self.kinetic(u, 0.5 * steps[0]);
        for (i, &h) in steps.iter().enumerate() {
            self.nonlinear(u, h);
            let next = steps.get(i + 1).copied().unwrap_or(0.0);
            self.kinetic(u, 0.5 * (h + next));
        }
        steps.len()
    }
}

fn single_step(u: &ComplexField, dt: f64, equation: Equation) -> Result<ComplexField> {
    u.expect_space(Space::Physical)?;
    u.check_finite()?;
    let stepper = Stepper::new(&u.grid, equation, 1.0)?;
    let mut out = u.clone();
    stepper.step(&mut out.values, dt);
    out.time += dt;
    Ok(out)
}

/// One Strang step of the 1D cubic NLS.
pub fn nls_step(u: &ComplexField, dt: f64) -> Result<ComplexField> {
    single_step(u, dt, Equation::Nls1d)
}

/// One Strang step of the Hartree equation (n = 2 or 3).
pub fn hartree_step(u: &ComplexField, dt: f64) -> Result<ComplexField> {
    let equation = match u.grid.dim() {
        2 => Equation::Hartree2d,
        3 => Equation::Hartree3d,
        n => {
            return Err(Error::Rejected(format!(
                "Hartree step needs n in {{2, 3}}, got {n}"
            )))
        }
    };
    single_step(u, dt, equation)
}

/// `u_*` in physical space (time 0).
pub fn initial_profile(config: &SimConfig) -> Result<ComplexField> {
    let grid = config.grid;
    let eps = config.eps;
    let field = match &config.initial_shape {
        InitialShape::Gaussian { width } => {
            let w2 = width * width;
            ComplexField::from_fn(grid, 0.0, Space::Physical, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Complex64::new(eps * (-r2 / (2.0 * w2)).exp(), 0.0)
            })
        }
        InitialShape::Supergaussian { width } => {
            let w2 = width * width;
            ComplexField::from_fn(grid, 0.0, Space::Physical, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Complex64::new(eps * (-(r2 / w2).powi(2) / 2.0).exp(), 0.0)
            })
        }
        InitialShape::CustomFile { path } => {
            let mut f = crate::cf::read_file(path)?;
            if f.grid != grid {
                return Err(Error::InvalidConfig(format!(
                    "{} holds a field on a different grid",
                    path.display()
                )));
            }
            if f.space == Space::Frequency {
                f = inverse_transform(&f)?;
            }
            f.time = 0.0;
            f.values.iter_mut().for_each(|z| *z *= eps);
            f
        }
    };
    field.check_finite()?;
    Ok(field)
}

/// Data at `t_start`: `u(t_start) = e^{i t_start Delta / 2} u_*`, and the
/// size `||u_*||_{H^{m,0}} + ||u_*||_{H^{0,m}}`.
pub fn initial_data(config: &SimConfig) -> Result<(ComplexField, f64)> {
    config.validate_static()?;
    let u_star = initial_profile(config)?;
    let size = data_norm(&u_star, config.weight_order())?;
    Ok((free_propagate(&u_star, config.t_start)?, size))
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub u: ComplexField,
    pub f_hat: ComplexField,
    /// Boundary-cell amplitude relative to `||u||_inf`.
    pub boundary_ratio: f64,
    pub leak: bool,
}

impl Snapshot {
    pub fn new(u: ComplexField) -> Result<Snapshot> {
        let f_hat = profile_hat(&u, u.time)?;
        Ok(Snapshot {
            time: u.time,
            boundary_ratio: boundary_ratio(&u),
            u,
            f_hat,
            leak: false,
        })
    }

    /// Profile in physical space.
    pub fn profile(&self) -> Result<ComplexField> {
        inverse_transform(&self.f_hat)
    }
}

#[derive(Clone, Debug)]
pub struct SnapshotSeries {
    pub config: SimConfig,
    pub snapshots: Vec<Snapshot>,
    pub norm_table: Vec<NormReport>,
    pub mass_drift: f64,
    pub max_boundary_amplitude: f64,
    pub initial_size: f64,
}

impl SnapshotSeries {
    /// Builds the derived records from raw snapshots (e.g. loaded from disk).
    pub fn from_snapshots(config: SimConfig, snapshots: Vec<Snapshot>, initial_size: f64) -> Result<Self> {
        let m = config.weight_order();
        let mut norm_table = Vec::with_capacity(snapshots.len());
        for s in &snapshots {
            norm_table.push(compute_norms(&s.u, &s.profile()?, m)?);
        }
        let l0 = norm_table.first().map(|n| n.l2).unwrap_or(0.0);
        let mass_drift = if l0 > 0.0 {
            norm_table
                .iter()
                .map(|n| (n.l2 - l0).abs() / l0)
                .fold(0.0, f64::max)
        } else {
            0.0
        };
        let max_boundary_amplitude = snapshots
            .iter()
            .map(|s| s.boundary_ratio)
            .fold(0.0, f64::max);
        Ok(SnapshotSeries {
            config,
            snapshots,
            norm_table,
            mass_drift,
            max_boundary_amplitude,
            initial_size,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("series is never empty")
    }

    /// Whether the final snapshot tripped the leak monitor.
    pub fn leak_flagged(&self) -> bool {
        self.snapshots.last().is_some_and(|s| s.leak)
    }
}

/// Largest boundary-cell modulus over `||u||_inf` (0 for the zero field).
pub fn boundary_ratio(u: &ComplexField) -> f64 {
    let sup = u.sup_norm();
    if sup == 0.0 {
        return 0.0;
    }
    let edge = u
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| u.grid.is_boundary(*i))
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max);
    edge / sup
}

/// Runs `config`, handing each snapshot to `observe` as soon as it exists.
/// On a leak or blow-up the snapshots recorded so far are kept (the
/// offending one flagged) and the abort reason is returned alongside.
pub fn evolve_partial(
    config: &SimConfig,
    mut observe: impl FnMut(&Snapshot) -> Result<()>,
) -> Result<(SnapshotSeries, Option<Error>)> {
    let u_star = initial_profile(config)?;
    config.validate(&u_star)?;
    let initial_size = data_norm(&u_star, config.weight_order())?;
    let mut u = free_propagate(&u_star, config.t_start)?;
    let stepper = Stepper::for_config(config)?;
    let dt = config.dt();
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut abort = None;
    let mut t_prev = config.t_start;
    for t in config.snapshot_times() {
        stepper.advance(&mut u.values, t_prev, t, dt);
        u.time = t;
        t_prev = t;
        if u.check_finite().is_err() {
            abort = Some(Error::BlowUp { time: t });
            break;
        }
        let mut snap = Snapshot::new(u.clone())?;
        if snap.boundary_ratio > config.leak_threshold {
            snap.leak = true;
            abort = Some(Error::Leak {
                time: t,
                amplitude: snap.boundary_ratio,
                threshold: config.leak_threshold,
            });
        }
        observe(&snap)?;
        snapshots.push(snap);
        if abort.is_some() {
            break;
        }
    }
    let series = SnapshotSeries::from_snapshots(config.clone(), snapshots, initial_size)?;
    Ok((series, abort))
}

/// Integrates `config` and records every snapshot.
pub fn evolve(config: &SimConfig) -> Result<SnapshotSeries> {
    match evolve_partial(config, |_| Ok(()))? {
        (series, None) => Ok(series),
        (_, Some(err)) => Err(err),
    }
}
