use l1pde::analytic::quadrature::integrate;
use l1pde::analytic::{
    elliptic_forcing, elliptic_support_radius, exact_elliptic, free_boundary_a1, gaussian_level_radius,
    greens_elliptic_eval, m1_rescaled, support_bound_elliptic, support_bound_parabolic, traveling_wave,
    FreeBoundaryPrediction, TravelingWaveParams,
};
use l1pde::{Field, Grid};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn wave_profile_solves_the_moving_frame_ode() {
    let p = TravelingWaveParams::new(0.05, 2.0).unwrap();
    let v = |s: f64| p.profile(s);
    let d = 1e-4;
    for k in 1..200 {
        let s = 0.05 * k as f64;
        let v1 = (v(s + d) - v(s - d)) / (2.0 * d);
        let v2 = (v(s + d) - 2.0 * v(s) + v(s - d)) / (d * d);
        // u_t = u_xx - gamma sign(u) with u = v(x - sigma t)
        let res = v2 + 2.0 * v1 - 0.05;
        assert!(res.abs() < 1e-6, "s = {s}: {res}");
    }
    assert_eq!(v(0.0), 0.0);
    assert!(((v(d) - v(0.0)) / d).abs() < 1e-5);
    assert!(v(-1.0) == 0.0);
}

#[test]
fn wave_sample_value() {
    let p = TravelingWaveParams::new(0.05, 2.0).unwrap();
    assert!((traveling_wave(3.0, 1.0, &p) - 0.0141917).abs() < 1e-7);
}

#[test]
fn exact_elliptic_solution_residual() {
    let gamma = 0.5;
    let a = elliptic_support_radius(gamma).unwrap();
    assert!((a - 3f64.sqrt()).abs() < 1e-15);
    assert!((elliptic_forcing(a) - 0.125).abs() < 1e-15);
    let u = |x: f64| exact_elliptic(x, gamma).unwrap();
    let d = 1e-4;
    for k in -80..=80 {
        let x = k as f64 * 0.02;
        let u2 = (u(x + d) - 2.0 * u(x) + u(x - d)) / (d * d);
        assert!((-u2 + gamma - elliptic_forcing(x)).abs() < 1e-6, "x = {x}");
        assert!(u(x) > 0.0);
    }
    // value and slope vanish at the support edge
    assert!(u(a).abs() < 1e-15);
    assert!(u(a - d) < 1e-7);
    assert_eq!(u(2.0), 0.0);
    assert!(exact_elliptic(0.0, 1.5).is_err());
}

#[test]
fn green_superposition_matches_closed_form() {
    let gamma = 0.5;
    let a = elliptic_support_radius(gamma).unwrap();
    for k in 0..100 {
        let x = -a + 2.0 * a * (k as f64 + 0.5) / 100.0;
        let g = greens_elliptic_eval(x, elliptic_forcing, gamma, (-a, a)).unwrap();
        let e = exact_elliptic(x, gamma).unwrap();
        assert!((g - e).abs() < 1e-8, "x = {x}: {g} vs {e}");
    }
    let at0 = greens_elliptic_eval(0.0, elliptic_forcing, gamma, (-a, a)).unwrap();
    assert!((at0 - exact_elliptic(0.0, gamma).unwrap()).abs() < 1e-8);
    for x in [a + 0.01, 2.5, -3.0] {
        assert!(greens_elliptic_eval(x, elliptic_forcing, gamma, (-a, a)).unwrap().abs() < 1e-8);
    }
}

#[test]
fn elliptic_support_bound_for_gaussian() {
    let g = Grid::line(4096, -8.0, 8.0).unwrap();
    let f = Field::from_fn_1d(g, |x| 2.0 * (-5.0 * x * x).exp()).unwrap();
    let full = support_bound_elliptic(&f, 1.0, 1.0, 0.0).unwrap();
    assert!((full - 1.585330).abs() < 1e-6, "{full}");
    let r = ((4.0f64).ln() / 5.0).sqrt();
    let oracle = 2.0 * simpson(|x| 2.0 * (-5.0 * x * x).exp() - 0.5, -r, r, 2000);
    let half = support_bound_elliptic(&f, 1.0, 0.5, 0.5).unwrap();
    // the grid sum of the kinked integrand is first order at the level set
    assert!((half - oracle).abs() < 4.0 * g.spacing(), "{half} vs {oracle}");
    assert!(support_bound_elliptic(&f, 1.0, 0.6, 0.6).is_err());
}

#[test]
fn parabolic_bound_for_wave_window() {
    let (gamma, sigma) = (0.05, 2.0);
    let p = TravelingWaveParams::new(gamma, sigma).unwrap();
    let g = Grid::line(3200, 0.0, 16.0).unwrap();
    let g0 = Field::from_fn_1d(g, |x| traveling_wave(x - 2.0, 0.0, &p)).unwrap();
    let bound = support_bound_parabolic(&g0, &Field::zeros(g), gamma, 1.0, 0.0, 1.0).unwrap();
    // int_0^L v(s) ds in closed form
    let l = 14.0;
    let mass = gamma / sigma * l * l / 2.0 + gamma / (sigma * sigma) * ((1.0 - (-sigma * l).exp()) / sigma - l);
    assert!((bound - mass / gamma).abs() < 0.05, "{bound} vs {}", mass / gamma);
}

#[test]
fn quadrature_against_simpson() {
    let f = |x: f64| (x * x).sin() * (-x).exp();
    let r = integrate(f, 0.0, 3.0, 1e-12).unwrap();
    assert!((r.value - simpson(f, 0.0, 3.0, 20000)).abs() < 1e-10);
}

#[test]
fn free_boundary_coefficient() {
    assert!((m1_rescaled(0.0).unwrap() + 0.25).abs() < 1e-8);
    assert!(m1_rescaled(4.0).unwrap() > 0.0);
    let est = free_boundary_a1().unwrap();
    assert!((est.a1 - 0.903447).abs() < 2e-6, "{}", est.a1);
    assert!(est.report.quadrature_error < 1e-6);

    let pred = FreeBoundaryPrediction::new(|x| 2.0 * (-5.0 * x * x).exp(), 1.0, 8.0).unwrap();
    let r = gaussian_level_radius(2.0, 5.0, 1.0).unwrap();
    assert!((pred.a0 - r).abs() < 1e-10);
    assert_eq!(pred.boundary(0.0), pred.a0);
    assert!(gaussian_level_radius(0.5, 5.0, 1.0).is_none());
}
