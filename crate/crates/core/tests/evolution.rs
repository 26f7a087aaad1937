use modscatter_core::coulomb::hartree_potential;
use modscatter_core::evolution::{
    evolve, evolve_partial, hartree_step, initial_data, initial_profile, nls_step, Stepper,
};
use modscatter_core::fourier::forward_transform;
use modscatter_core::propagator::free_propagate;
use modscatter_core::scattering::profile_hat;
use modscatter_core::{Complex64, ComplexField, Equation, Error, Grid, InitialShape, SimConfig, Space};

fn gaussian(grid: Grid, amp: f64, width: f64) -> ComplexField {
    ComplexField::from_fn(grid, 0.0, Space::Physical, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::new(amp * (-r2 / (2.0 * width * width)).exp(), 0.0)
    })
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss4() -> [(f64, f64); 4] {
    let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let wa = (18.0 + 30f64.sqrt()) / 36.0;
    let wb = (18.0 - 30f64.sqrt()) / 36.0;
    [(-b, wb), (-a, wa), (a, wa), (b, wb)].map(|(x, w)| ((x + 1.0) / 2.0, w / 2.0))
}

/// `S(dt) u0 - i int_0^dt S(dt - s) g(S(s) u0) ds` with 4-point Gauss quadrature.
fn picard(u0: &ComplexField, dt: f64, g: impl Fn(&ComplexField) -> ComplexField) -> ComplexField {
    let mut out = free_propagate(u0, dt).unwrap();
    for (node, w) in gauss4() {
        let s = node * dt;
        let us = free_propagate(u0, s).unwrap();
        let back = free_propagate(&g(&us), dt - s).unwrap();
        for (o, b) in out.values.iter_mut().zip(&back.values) {
            *o -= Complex64::new(0.0, w * dt) * b;
        }
    }
    out
}

#[test]
fn nls_step_matches_first_picard_iterate() {
    let grid = Grid::cubic(1, 1024, 40.0).unwrap();
    let u0 = gaussian(grid, 0.5, 1.0);
    let dt = 1e-3;
    let oracle = picard(&u0, dt, |u| {
        let mut g = u.clone();
        g.values.iter_mut().for_each(|z| *z *= z.norm_sqr());
        g
    });
    let step = nls_step(&u0, dt).unwrap();
    let err = step.max_abs_diff(&oracle);
    assert!(err < 1e-5, "{err}");
    // the nonlinear part is resolved, not just the free flow
    let free = free_propagate(&u0, dt).unwrap();
    assert!(step.max_abs_diff(&free) > 100.0 * err);
    assert!((step.time - dt).abs() < 1e-15);
}

#[test]
fn hartree_step_matches_first_picard_iterate() {
    let grid = Grid::cubic(2, 64, 16.0).unwrap();
    let u0 = gaussian(grid, 0.5, 1.0);
    let dt = 1e-3;
    let oracle = picard(&u0, dt, |u| {
        let v = hartree_potential(u).unwrap();
        let mut g = u.clone();
        for (z, v) in g.values.iter_mut().zip(&v.values) {
            *z *= v.re;
        }
        g
    });
    let step = hartree_step(&u0, dt).unwrap();
    let err = step.max_abs_diff(&oracle);
    assert!(err < 1e-5, "{err}");
    let free = free_propagate(&u0, dt).unwrap();
    assert!(step.max_abs_diff(&free) > 100.0 * err);
}

#[test]
fn steps_preserve_zero_and_mass() {
    let g1 = Grid::cubic(1, 256, 30.0).unwrap();
    let z = ComplexField::zeros(g1, 0.0, Space::Physical);
    assert!(nls_step(&z, 0.01).unwrap().is_zero());
    let g2 = Grid::cubic(2, 32, 12.0).unwrap();
    assert!(hartree_step(&ComplexField::zeros(g2, 0.0, Space::Physical), 0.01)
        .unwrap()
        .is_zero());

    let u = gaussian(g1, 0.8, 1.0);
    let m0 = u.l2_norm();
    let mut v = u.clone();
    for _ in 0..20 {
        v = nls_step(&v, 0.01).unwrap();
        assert!((v.l2_norm() - m0).abs() / m0 < 1e-13);
    }
    let w = gaussian(g2, 0.8, 1.5);
    let m0 = w.l2_norm();
    let w1 = hartree_step(&w, 0.01).unwrap();
    assert!((w1.l2_norm() - m0).abs() / m0 < 1e-13);
}

#[test]
fn step_rejections() {
    let g1 = Grid::cubic(1, 64, 10.0).unwrap();
    let u = gaussian(g1, 1.0, 1.0);
    assert!(hartree_step(&u, 0.01).is_err());
    let mut bad = u.clone();
    bad.values[3] = Complex64::new(f64::NAN, 0.0);
    assert!(matches!(nls_step(&bad, 0.01), Err(Error::NonFinite)));
    let hat = forward_transform(&u).unwrap();
    assert!(matches!(nls_step(&hat, 0.01), Err(Error::WrongSpace { .. })));
}

#[test]
fn strang_step_is_reversible() {
    for (grid, eq) in [
        (Grid::cubic(1, 512, 40.0).unwrap(), Equation::Nls1d),
        (Grid::cubic(2, 64, 16.0).unwrap(), Equation::Hartree2d),
    ] {
        let u = gaussian(grid, 1.0, 1.0);
        let s = Stepper::new(&grid, eq, 1.0).unwrap();
        let mut v = u.values.clone();
        s.step(&mut v, 0.01);
        s.step(&mut v, -0.01);
        let back = ComplexField::new(grid, v, 0.0, Space::Physical).unwrap();
        let err = back.max_abs_diff(&u) / u.sup_norm();
        assert!(err < 1e-11, "{eq:?}: {err}");
    }
}

#[test]
fn second_order_convergence() {
    let grid = Grid::cubic(1, 512, 40.0).unwrap();
    let u = gaussian(grid, 1.0, 1.0);
    let s = Stepper::new(&grid, Equation::Nls1d, 1.0).unwrap();
    let run = |dt: f64| {
        let mut v = u.values.clone();
        s.advance(&mut v, 1.0, 2.0, dt);
        ComplexField::new(grid, v, 2.0, Space::Physical).unwrap()
    };
    let dt = 0.01;
    let reference = run(dt / 8.0);
    let e1 = run(dt).max_abs_diff(&reference);
    let e2 = run(dt / 2.0).max_abs_diff(&reference);
    // exact Richardson factor against a dt/8 reference: (1 - 1/64)/(1/4 - 1/64)
    let expected = (1.0 - 1.0 / 64.0) / (0.25 - 1.0 / 64.0);
    let ratio = e1 / e2;
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "{ratio}");
    assert!((ratio / expected - 1.0).abs() < 0.05, "{ratio} vs {expected}");
}

#[test]
fn advance_lands_exactly_and_fuses_half_steps() {
    let grid = Grid::cubic(1, 256, 30.0).unwrap();
    let u = gaussian(grid, 1.0, 1.0);
    let s = Stepper::new(&grid, Equation::Nls1d, 1.0).unwrap();
    let mut fused = u.values.clone();
    let steps = s.advance(&mut fused, 1.0, 1.0 + 0.0375, 0.01);
    assert_eq!(steps, 4);
    let mut plain = u.values.clone();
    for h in [0.01, 0.01, 0.01, 0.0075] {
        s.step(&mut plain, h);
    }
    let a = ComplexField::new(grid, fused, 0.0, Space::Physical).unwrap();
    let b = ComplexField::new(grid, plain, 0.0, Space::Physical).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-14);
    let mut v = u.values.clone();
    assert_eq!(s.advance(&mut v, 2.0, 2.0, 0.01), 0);
    assert_eq!(v, u.values);
}

#[test]
fn gauge_covariance() {
    let grid = Grid::cubic(1, 512, 40.0).unwrap();
    let u = gaussian(grid, 0.9, 1.2);
    let rot = Complex64::from_polar(1.0, 0.7);
    let s = Stepper::new(&grid, Equation::Nls1d, 1.0).unwrap();
    let mut a = u.values.clone();
    let mut b: Vec<Complex64> = u.values.iter().map(|z| z * rot).collect();
    s.advance(&mut a, 1.0, 3.0, 0.01);
    s.advance(&mut b, 1.0, 3.0, 0.01);
    let worst = a
        .iter()
        .zip(&b)
        .map(|(a, b)| (a * rot - b).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-13, "{worst}");
}

#[test]
fn nls_scaling_symmetry_on_nested_grids() {
    // v(t, x) = 2 u(4t, 2x) solves the same equation
    let lambda = 2.0;
    let n = 512;
    let ga = Grid::cubic(1, n, 40.0).unwrap();
    let gb = Grid::cubic(1, n, 40.0 / lambda).unwrap();
    let ua = gaussian(ga, 0.7, 1.0);
    let vb = ComplexField::from_fn(gb, 0.0, Space::Physical, |x| {
        Complex64::new(lambda * 0.7 * (-(lambda * x[0]).powi(2) / 2.0).exp(), 0.0)
    });
    let sa = Stepper::new(&ga, Equation::Nls1d, 1.0).unwrap();
    let sb = Stepper::new(&gb, Equation::Nls1d, 1.0).unwrap();
    let mut a = ua.values.clone();
    let mut b = vb.values.clone();
    let (t, dt) = (0.5, 0.005);
    sa.advance(&mut a, 0.0, lambda * lambda * t, dt);
    sb.advance(&mut b, 0.0, t, dt / (lambda * lambda));
    let worst = a
        .iter()
        .zip(&b)
        .map(|(a, b)| (lambda * a - b).norm())
        .fold(0.0, f64::max);
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(worst / scale < 1e-4, "{worst}");
}

fn nls_config(n: usize, l: f64, t_end: f64, eps: f64) -> SimConfig {
    SimConfig::new(Equation::Nls1d, Grid::cubic(1, n, l).unwrap(), t_end, eps)
}

#[test]
fn initial_data_is_free_flow_of_the_profile() {
    let c = nls_config(4096, 400.0, 20.0, 0.5);
    let (u1, size) = initial_data(&c).unwrap();
    assert_eq!(u1.time, 1.0);
    let u_star = initial_profile(&c).unwrap();
    let l2 = u_star.l2_norm();
    assert!((l2 - 0.5 * std::f64::consts::PI.powf(0.25)).abs() < 1e-8, "{l2}");
    assert!(size > l2);
    let f_hat = profile_hat(&u1, 1.0).unwrap();
    let u_star_hat = forward_transform(&u_star).unwrap();
    assert!(f_hat.max_abs_diff(&u_star_hat) < 1e-14);

    let zero = nls_config(4096, 400.0, 20.0, 0.0);
    let (z, size) = initial_data(&zero).unwrap();
    assert!(z.is_zero());
    assert_eq!(size, 0.0);
}

#[test]
fn supergaussian_and_custom_file_shapes() {
    let mut c = nls_config(1024, 200.0, 10.0, 0.3);
    c.initial_shape = InitialShape::Supergaussian { width: 1.5 };
    let u = initial_profile(&c).unwrap();
    let o = c.grid.origin_index();
    assert!((u.values[o].re - 0.3).abs() < 1e-15);
    let x = c.grid.x(0, o + 100);
    let expect = 0.3 * (-(x / 1.5).powi(4) / 2.0).exp();
    assert!((u.values[o + 100].re - expect).abs() < 1e-15);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shape.cf");
    modscatter_core::cf::write_file(&u.scaled(Complex64::new(1.0 / 0.3, 0.0)), &path).unwrap();
    c.initial_shape = InitialShape::CustomFile { path: path.clone() };
    c.eps = 0.3;
    let v = initial_profile(&c).unwrap();
    assert!(v.max_abs_diff(&u) < 1e-15);

    let other = nls_config(512, 200.0, 10.0, 0.3);
    modscatter_core::cf::write_file(&ComplexField::zeros(other.grid, 0.0, Space::Physical), &path).unwrap();
    assert!(matches!(initial_profile(&c), Err(Error::InvalidConfig(_))));
    c.initial_shape = InitialShape::CustomFile {
        path: dir.path().join("missing.cf"),
    };
    assert!(matches!(initial_profile(&c), Err(Error::Io(_))));
}

#[test]
fn zero_data_evolves_to_zero() {
    let c = nls_config(1024, 200.0, 10.0, 0.0);
    let s = evolve(&c).unwrap();
    assert_eq!(s.times(), c.snapshot_times());
    assert!(s.snapshots.iter().all(|s| s.u.is_zero() && s.f_hat.is_zero()));
    assert_eq!(s.mass_drift, 0.0);
    assert!(s.norm_table.iter().all(|n| n.l2 == 0.0 && n.linf == 0.0));
}

#[test]
fn linear_hook_reproduces_free_flow() {
    let mut c = nls_config(2048, 400.0, 20.0, 0.5);
    c.linear_only = true;
    let s = evolve(&c).unwrap();
    let u_star = initial_profile(&c).unwrap();
    for snap in &s.snapshots {
        let free = free_propagate(&u_star, snap.time).unwrap();
        assert!(snap.u.max_abs_diff(&free) < 1e-12, "t = {}", snap.time);
    }
    let u_star_hat = forward_transform(&u_star).unwrap();
    assert!(s.last().f_hat.max_abs_diff(&u_star_hat) < 1e-12);
    assert!(s.mass_drift < 1e-12);
}

#[test]
fn snapshots_are_consistent() {
    let c = nls_config(2048, 400.0, 20.0, 0.5);
    let s = evolve(&c).unwrap();
    assert!(s.mass_drift < 1e-12);
    for snap in &s.snapshots {
        let f = free_propagate(&snap.u, -snap.time).unwrap();
        let f_hat = forward_transform(&f).unwrap();
        assert!(snap.f_hat.max_abs_diff(&f_hat) < 1e-13);
    }
    assert_eq!(s.norm_table.len(), s.snapshots.len());
    assert!(s.max_boundary_amplitude < c.leak_threshold);
}

#[test]
fn leak_aborts_with_partial_series() {
    // box just large enough for the static rule, but the monitor is strict
    let mut c = nls_config(1024, 200.0, 15.0, 0.5);
    c.leak_threshold = 1e-14;
    match evolve(&c) {
        Err(Error::Leak { amplitude, .. }) => assert!(amplitude > 1e-14),
        other => panic!("expected a leak, got {other:?}"),
    }
    let (series, abort) = evolve_partial(&c, |_| Ok(())).unwrap();
    assert!(matches!(abort, Some(Error::Leak { .. })));
    assert!(series.leak_flagged());
    assert!(series.snapshots.iter().rev().skip(1).all(|s| !s.leak));
}

#[test]
fn box_rule_is_enforced() {
    let c = nls_config(1024, 100.0, 20.0, 0.5);
    assert!(matches!(evolve(&c), Err(Error::InvalidConfig(_))));
}
