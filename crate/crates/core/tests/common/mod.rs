//! Independent oracles for the periodic Coulomb convolution of a Gaussian
//! charge: an Ewald split into an explicit Fourier sum and a short-range
//! real-space image sum.
#![allow(dead_code)]

use std::f64::consts::PI;

use libm::{erf, erfc};

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out
}

/// `erfc(alpha r) / r` in the plane, smoothed by a normalized Gaussian with
/// per-axis variance `s2`:
/// `(2/sqrt(pi)) int_0^1 alpha / (u^2 + 2 alpha^2 s2) exp(-alpha^2 r^2 / (u^2 + 2 alpha^2 s2)) du`.
pub fn smeared_erfc_2d(r: f64, alpha: f64, s2: f64) -> f64 {
    let c = 2.0 * alpha * alpha * s2;
    let sum: f64 = gauss_legendre(64)
        .into_iter()
        .map(|(u, w)| {
            let d = u * u + c;
            w * alpha / d * (-alpha * alpha * r * r / d).exp()
        })
        .sum();
    2.0 / PI.sqrt() * sum
}

/// Zero-mean periodic potential `sum_{k != 0} (2 pi/|k|) rho_hat(k) e^{ikx} / P^2`
/// of a unit Gaussian charge (per-axis variance `s2`) in a square of side `p`.
pub fn periodic_coulomb_2d(x: [f64; 2], p: f64, s2: f64, alpha: f64) -> f64 {
    let dk = 2.0 * PI / p;
    let m_max = (12.0 * alpha / dk).ceil() as i64 + 1;
    let mut long = 0.0;
    for m1 in -m_max..=m_max {
        for m2 in -m_max..=m_max {
            if m1 == 0 && m2 == 0 {
                continue;
            }
            let (k1, k2) = (m1 as f64 * dk, m2 as f64 * dk);
            let k = k1.hypot(k2);
            long += 2.0 * PI / k * erfc(k / (2.0 * alpha)) * (-s2 * k * k / 2.0).exp()
                * (k1 * x[0] + k2 * x[1]).cos();
        }
    }
    long /= p * p;
    let mut short = 0.0;
    for n1 in -2..=2 {
        for n2 in -2..=2 {
            let r = (x[0] + n1 as f64 * p).hypot(x[1] + n2 as f64 * p);
            short += smeared_erfc_2d(r, alpha, s2);
        }
    }
    long + short - 2.0 * PI.sqrt() / (alpha * p * p)
}

/// Zero-mean periodic Coulomb potential (`4 pi/|k|^2`) of a unit Gaussian
/// charge of width `a` in a cube of side `l`. `beta` is the Ewald parameter
/// of the combined Gaussian.
pub fn periodic_coulomb_3d(x: [f64; 3], l: f64, a: f64, beta: f64) -> f64 {
    let dk = 2.0 * PI / l;
    let m_max = (13.0 * beta / dk).ceil() as i64 + 1;
    let mut long = 0.0;
    for m1 in -m_max..=m_max {
        for m2 in -m_max..=m_max {
            for m3 in -m_max..=m_max {
                if m1 == 0 && m2 == 0 && m3 == 0 {
                    continue;
                }
                let k = [m1 as f64 * dk, m2 as f64 * dk, m3 as f64 * dk];
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                let kx = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                long += 4.0 * PI / k2 * (-k2 / (4.0 * beta * beta)).exp() * kx.cos();
            }
        }
    }
    long /= l * l * l;
    // the smeared erfc(alpha r)/r is erf(r/(a sqrt2))/r - erf(beta r)/r
    let g = 1.0 / (a * 2f64.sqrt());
    let mut short = 0.0;
    for n1 in -1i32..=1 {
        for n2 in -1i32..=1 {
            for n3 in -1i32..=1 {
                let y = [
                    x[0] + n1 as f64 * l,
                    x[1] + n2 as f64 * l,
                    x[2] + n3 as f64 * l,
                ];
                let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
                short += if r < 1e-12 {
                    2.0 / PI.sqrt() * (g - beta)
                } else {
                    (erf(g * r) - erf(beta * r)) / r
                };
            }
        }
    }
    // zero mode of the short-range part: pi (1/beta^2 - 2 a^2) / l^3
    let alpha2 = 1.0 / (1.0 / (beta * beta) - 2.0 * a * a);
    long + short - PI / (alpha2 * l * l * l)
}

/// Free-space potential of a unit Gaussian charge in 3D.
pub fn free_coulomb_3d(r: f64, a: f64) -> f64 {
    erf(r / (a * 2f64.sqrt())) / r
}
