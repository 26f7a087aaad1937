use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, Space};
use crate::fourier::{forward_transform, transform};
use crate::reduce::{pairwise_indexed, pairwise_map};

/// The components of the X_T norm at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub time: f64,
    pub l2: f64,
    pub linf: f64,
    /// `|| |grad|^m u ||_2`
    pub hdot_m0: f64,
    /// `|| |x|^m f ||_2`
    pub hdot_0m: f64,
    pub m: u32,
}

/// Norms of the solution `u` and its profile `f`, both in physical space.
pub fn compute_norms(u: &ComplexField, f: &ComplexField, m: u32) -> Result<NormReport> {
    u.same_grid(f)?;
    u.expect_space(Space::Physical)?;
    f.expect_space(Space::Physical)?;
    if u.time != f.time {
        return Err(Error::Rejected(format!(
            "solution at t = {} and profile at t = {} differ in time",
            u.time, f.time
        )));
    }
    let u_hat = forward_transform(u)?;
    Ok(NormReport {
        time: u.time,
        l2: u.l2_norm(),
        linf: u.sup_norm(),
        hdot_m0: weighted_l2(&u_hat, m, false),
        hdot_0m: weighted_l2(f, m, false),
        m,
    })
}

/// `|| |y|^m v ||_2` (or `|| <y>^m v ||_2` when `inhomogeneous`) with `y`
/// the coordinate of the field's own lattice.
pub fn weighted_l2(field: &ComplexField, m: u32, inhomogeneous: bool) -> f64 {
    let r2 = match field.space {
        Space::Physical => field.grid.radius_sq(),
        Space::Frequency => field.grid.freq_radius_sq(),
    };
    let shift = if inhomogeneous { 1.0 } else { 0.0 };
    let s = pairwise_indexed(&field.values, &|i, z: &Complex64| {
        (r2[i] + shift).powi(m as i32) * z.norm_sqr()
    });
    (s * field.measure()).sqrt()
}

/// `||g||_{H^{m,0}} + ||g||_{H^{0,m}}`, the size of initial data.
pub fn data_norm(g: &ComplexField, m: u32) -> Result<f64> {
    let other = transform(g)?;
    Ok(weighted_l2(g, m, true) + weighted_l2(&other, m, true))
}

pub fn mass(u: &ComplexField) -> f64 {
    pairwise_map(&u.values, &|z| z.norm_sqr()) * u.measure()
}
