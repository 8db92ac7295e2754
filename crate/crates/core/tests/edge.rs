use std::f64::consts::{FRAC_PI_4, PI, TAU};

use elliptic_gas::edge::{
    arclength_escape_density, dt_rho_expansion, edge_density, exp_omega_expansion, n_out_asymptotic, omega_edge_expansion,
    rho0, tangential_consistency, EdgeExpansion,
};
use elliptic_gas::kernel::{density, expected_outside_exact};
use elliptic_gas::quadrature::integrate_interval;
use elliptic_gas::validation::{normal_derivative, omega_taylor, tangential_derivative};
use elliptic_gas::{EnsembleParams, Geometry};

fn params(t: f64, tt: f64, n: usize) -> EnsembleParams {
    EnsembleParams::new(t, tt, n).unwrap()
}

fn inv_sqrt_2pi3() -> f64 {
    1.0 / (2.0 * PI.powi(3)).sqrt()
}

#[test]
fn edge_density_examples() {
    let p = params(0.5, 1.0, 100);
    let f = Geometry::new(&p).boundary_frame(0.4);
    assert!((edge_density(-4.0, 0.0, &f, &p) - 1.0 / PI).abs() < 1e-12);
    assert_eq!(rho0(0.0), 1.0 / TAU);
}

/// `sup |N (rho_n - rho0 - rho1 / sqrt N) - rho2| / sup |rho2|` on the normal line.
fn second_order_gap(theta: f64, n: usize) -> f64 {
    let p = params(0.5, 1.0, n);
    let e = EdgeExpansion::new(theta, &p);
    let big_n = p.big_n();
    let root = big_n.sqrt();
    let mut gap: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..=120 {
        let xi = -3.0 + 0.05 * i as f64;
        let exact = density(e.frame.z0 + e.frame.normal * (xi / root), &p);
        let scaled = big_n * (exact - e.rho0(xi) - e.rho1(xi) / root);
        gap = gap.max((scaled - e.rho2(xi)).abs());
        peak = peak.max(e.rho2(xi).abs());
    }
    gap / peak
}

#[test]
fn second_order_profile_converges() {
    for (theta, at_1000) in [(0.0, 0.13), (FRAC_PI_4, 0.04)] {
        let (a, b) = (second_order_gap(theta, 1000), second_order_gap(theta, 4000));
        assert!(a < at_1000, "theta {theta}: {a}");
        assert!((b / a - 0.5).abs() < 0.05, "theta {theta}: {a} -> {b}");
    }
}

#[test]
fn first_order_term_cancels_jacobian() {
    let step = |xi: f64| if xi < 0.0 { 1.0 / PI } else { 0.0 };
    let f = |xi: f64| xi * (rho0(xi) - step(xi)) + (xi * xi - 1.0) * (-2.0 * xi * xi).exp() * inv_sqrt_2pi3() / 3.0;
    let total = integrate_interval(f, -8.0, 0.0, 40, 8) + integrate_interval(f, 0.0, 8.0, 40, 8);
    assert!(total.abs() < 1e-10, "{total:e}");
}

#[test]
fn omega_expansions() {
    let f = Geometry::new(&params(0.5, 1.0, 1)).boundary_frame(1.1);
    assert_eq!(omega_edge_expansion(0.0, 0.0, &f), 0.0);
    assert_eq!(exp_omega_expansion(0.0, 0.0, &f, 100.0), 1.0);
    let c = omega_taylor();
    assert!(c.pass, "{c:?}");
}

#[test]
fn derivative_expansions() {
    let p = params(0.0, 1.0, 100);
    let f = Geometry::new(&p).boundary_frame(0.3);
    let root = (p.big_n() * inv_sqrt_2pi3().powi(2)).sqrt();
    for y in [-0.1, 0.05, 0.2] {
        assert!((dt_rho_expansion(0.0, y, &f, &p) + 2.0 * y * root).abs() < 1e-14);
    }
    for check in [normal_derivative(), tangential_derivative()] {
        assert!(check.pass, "{check:?}");
    }
}

#[test]
fn outside_count_examples() {
    let v = n_out_asymptotic(&params(0.5, 1.0, 64)).unwrap();
    assert_eq!(format!("{:.5}", v.total()), "3.91404");

    let n = 16;
    let p = params(0.0, 1.0, n);
    let v = n_out_asymptotic(&p).unwrap();
    let pref = (n as f64).sqrt() / TAU.powf(1.5);
    assert!((v.leading - pref * TAU).abs() < 1e-13);
    assert!((v.correction + pref * PI / (6.0 * n as f64)).abs() < 1e-14);
    let exact = expected_outside_exact(&p).unwrap().n_out;
    assert!((v.total() - exact).abs() < 0.01, "{} vs {exact}", v.total());

    for t in [0.0, 0.3, 0.6, 0.9] {
        assert!(n_out_asymptotic(&params(t, 1.0, 10)).unwrap().correction <= 0.0);
    }
}

#[test]
fn leading_term_from_perimeter_quadrature() {
    for (t, tt, n) in [(0.5, 1.0, 64), (0.75, 0.4375, 10), (0.25, 2.0, 7)] {
        let p = params(t, tt, n);
        let g = Geometry::new(&p);
        let perimeter = integrate_interval(|th| g.speed(th), 0.0, TAU, 40, 16);
        assert!((perimeter - g.perimeter()).abs() < 1e-10 * perimeter);
        let v = n_out_asymptotic(&p).unwrap();
        let want = (n as f64).sqrt() * perimeter / (TAU.powf(1.5) * tt.sqrt());
        assert!((v.leading - want).abs() < 1e-10 * want);
    }
}

#[test]
fn escape_density_integrates_to_outside_count() {
    for (t, n) in [(0.5, 64), (0.25, 9), (0.75, 200)] {
        let p = params(t, 1.0, n);
        let g = Geometry::new(&p);
        let total = integrate_interval(|th| arclength_escape_density(th, &p) * g.speed(th), 0.0, TAU, 40, 32);
        let want = n_out_asymptotic(&p).unwrap().total();
        assert!((total - want).abs() < 1e-8 * want, "{total} vs {want}");
    }
    let p = params(0.0, 1.0, 30);
    let a = arclength_escape_density(0.2, &p);
    assert!((a - arclength_escape_density(2.9, &p)).abs() < 1e-15);
}

#[test]
fn tangential_routes() {
    let p = params(0.5, 1.0, 10_000);
    let f = Geometry::new(&p).boundary_frame(0.0);
    let r = tangential_consistency(0.0, &f, &p).unwrap();
    assert_eq!(r.tangential, r.normal_route);
    let r = tangential_consistency(1.0, &f, &p).unwrap();
    assert!(r.gap() < 3e-5, "{}", r.gap());

    let p = params(0.0, 1.0, 400);
    let f = Geometry::new(&p).boundary_frame(1.0);
    let e = EdgeExpansion::new(1.0, &p);
    let root = p.big_n().sqrt();
    for eta in [-2.0, 0.5, 1.5] {
        let first = (edge_density(0.0, eta, &f, &p) - rho0(0.0) - e.psi(0.0, eta) * inv_sqrt_2pi3() / p.big_n()) * root;
        let want = -(1.0 + 3.0 * eta * eta) / 3.0 * inv_sqrt_2pi3();
        assert!((first - want).abs() < 1e-14);
    }
}

#[test]
fn symmetry_at_other_angles() {
    let e = EdgeExpansion::new(FRAC_PI_4, &params(0.25, 1.0, 50));
    for i in 0..=30 {
        let xi = -3.0 + 0.2 * i as f64;
        assert!((e.rho0(xi) + e.rho0(-xi) - 1.0 / PI).abs() < 1e-15);
        assert!((e.rho1(xi) - e.rho1(-xi)).abs() < 1e-15);
        assert!((e.rho2(xi) + e.rho2(-xi)).abs() < 1e-13);
    }
}
