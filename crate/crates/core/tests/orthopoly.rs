use std::f64::consts::{FRAC_PI_4, PI};

use elliptic_gas::geometry::Geometry;
use elliptic_gas::orthopoly::{
    contour_poly_derivatives, eval_poly, eval_polys, gamma_exact, h_boundary_relations, h_boundary_targets, h_r,
    hermite_ode_residual, log_normalized_pn, wkb, wkb_eval_p,
};
use elliptic_gas::quadrature::{integrate_refined, GridSpec, Region};
use elliptic_gas::special::log_factorial;
use elliptic_gas::validation::orthonormality;
use elliptic_gas::EnsembleParams;
use num_complex::Complex64;
use proptest::prelude::*;

fn params(t: f64, tt: f64, n: usize) -> EnsembleParams {
    EnsembleParams::new(t, tt, n).unwrap()
}

/// Integer coefficients of the physicists' Hermite polynomials up to degree `jmax`.
fn hermite_coefficients(jmax: usize) -> Vec<Vec<i128>> {
    let mut h = vec![vec![1i128], vec![0, 2]];
    for j in 1..jmax {
        let mut next = vec![0i128; j + 2];
        for (k, c) in h[j].iter().enumerate() {
            next[k + 1] += 2 * c;
        }
        for (k, c) in h[j - 1].iter().enumerate() {
            next[k] -= 2 * j as i128 * c;
        }
        h.push(next);
    }
    h
}

#[test]
fn recurrence_matches_hermite_closed_form() {
    let p = params(0.5, 1.0, 32);
    let (t, big_n) = (p.t(), p.big_n());
    let z = Complex64::new(2.0, 1.0);
    let seq = eval_polys(z, 20, &p).unwrap();
    let x = ((big_n * (1.0 - t * t)) / (2.0 * t)).sqrt() * z;
    for (j, coeffs) in hermite_coefficients(20).iter().enumerate() {
        let h: Complex64 = coeffs.iter().enumerate().map(|(k, c)| *c as f64 * x.powu(k as u32)).sum();
        let log_pref = 0.5 * j as f64 * (t / 2.0).ln() + 0.25 * (1.0 - t * t).ln() + 0.5 * (big_n / PI).ln() - 0.5 * log_factorial(j as u64);
        let want = h * log_pref.exp();
        let got = seq.values[j].to_complex();
        assert!((got - want).norm() <= 1e-9 * want.norm(), "j={j}: {got} vs {want}");
    }
    for k in 1..20 {
        assert!(seq.recurrence_residual(k) < 1e-10);
    }
}

#[test]
fn gamma_examples() {
    assert!((gamma_exact(0, &params(0.0, 1.0, 1)).exp() - 1.0 / PI.sqrt()).abs() < 1e-15);

    let p = params(0.5, 0.1, 1);
    let mass = integrate_refined(&p, Region::Plane, GridSpec::default(), 1, 1e-12, 1e-12, 3, |z, out| {
        out[0] = eval_poly(z, 0, &p).abs().powi(2) * (-p.big_n() * p.potential(z)).exp();
    })
    .unwrap();
    assert!((mass.value[0] - 1.0).abs() < 1e-8);

    let p = params(0.5, 1.0, 64);
    let g = Geometry::new(&p);
    let big_n = p.big_n();
    let log_model = 0.25 * (big_n / (2.0 * PI.powi(3))).ln() + 0.5 * (-big_n * g.robin() - g.capacity().ln());
    let ratio = (gamma_exact(64, &p) - log_model).exp() - 1.0;
    let want = -1.0 / (24.0 * big_n);
    assert!((ratio - want).abs() < 0.1 * want.abs(), "{ratio} vs {want}");
}

#[test]
fn orthonormal_up_to_degree_12() {
    for (t, n) in [(0.5, 16), (0.25, 8), (0.0, 12)] {
        let c = orthonormality(12, &params(t, 1.0, n)).unwrap();
        assert!(c.pass, "{c:?}");
    }
}

#[test]
fn eval_polys_examples() {
    let p = params(0.5, 1.0, 9);
    let seq = eval_polys(Complex64::new(0.0, 0.0), 17, &p).unwrap();
    for j in (1..=17).step_by(2) {
        assert!(seq.values[j].is_zero() || seq.values[j].abs() < 1e-300);
    }
    let p0 = params(0.0, 1.0, 10);
    let z = Complex64::new(0.7, -0.4);
    let seq = eval_polys(z, 18, &p0).unwrap();
    for (j, v) in seq.values.iter().enumerate() {
        let want = gamma_exact(j as u64, &p0).exp() * z.powu(j as u32);
        assert!((v.to_complex() - want).norm() <= 1e-13 * want.norm());
    }
    assert!(eval_polys(z, 19, &p0).is_err());
}

#[test]
fn derivative_lowers_degree() {
    let p = params(0.5, 1.0, 24);
    let z = Complex64::new(0.9, 0.6);
    for k in [1, 5, 12, 24] {
        let ([_, d1, _], log_ref) = contour_poly_derivatives(z, k, &p);
        let lower = eval_poly(z, k - 1, &p).scaled_by(log_ref) * (p.big_n() * k as f64 * (1.0 - p.t().powi(2))).sqrt();
        assert!((d1 - lower).norm() <= 1e-9 * lower.norm(), "k={k}");
    }
}

#[test]
fn ode_residual_examples() {
    let p = params(0.5, 1.0, 32);
    assert_eq!(hermite_ode_residual(Complex64::new(0.3, 0.1), 0, &p), 0.0);
    assert!(hermite_ode_residual(Complex64::new(-1.3, 0.7), 1, &p) < 1e-12);
    assert!(hermite_ode_residual(Complex64::new(1.5, 0.5), 32, &p) < 1e-8);
}

#[test]
fn wkb_examples() {
    let p0 = params(0.0, 2.0, 16);
    let g0 = Geometry::new(&p0);
    let z = Complex64::new(1.2, -0.9);
    for r in [-1, 0, 2] {
        let e = wkb(z, r, &p0).unwrap();
        assert!((e.g_val - z.ln()).norm() < 1e-14);
        let rf = r as f64;
        let want = -(1.0 + 6.0 * rf + 6.0 * rf * rf) / (24.0 * 2.0);
        assert!((e.h_r_val - want).norm() < 1e-14);
        assert!((h_r(z, r, &g0).unwrap() - want).norm() < 1e-14);
    }

    let p = params(0.5, 1.0, 64);
    let g = Geometry::new(&p);
    for z in [Complex64::new(2.0, 0.0), Complex64::new(0.3, 1.1), Complex64::new(-1.5, -0.4)] {
        for r in [-1, 0, 1] {
            let e = wkb(z, r, &p).unwrap();
            assert!((e.g_val - (e.y_minus1 + g.robin() / (2.0 * p.total_mass()))).norm() < 1e-10);
            let [_, d1, _, _] = g.psi_derivatives(z).unwrap();
            let psi = g.psi(z).unwrap();
            let want = d1.sqrt() * psi.powi(r as i32);
            assert!((e.y0.exp() - want).norm() < 1e-10 * want.norm());
            assert!((e.h_r_val - e.y1).norm() < 1e-10 * e.y1.norm().max(1.0));
        }
    }
    assert!(wkb(Complex64::new(0.5, 0.05), 0, &p).is_err());
}

#[test]
fn wkb_error_quarters_when_n_doubles() {
    let z = Complex64::new(2.0, 0.0);
    let err = |n: usize| {
        let p = params(0.5, 1.0, n);
        let exact = eval_poly(z, n, &p);
        let approx = wkb_eval_p(z, 0, &p).unwrap();
        (approx.scaled_by(exact.log_mag) / exact.scaled_by(exact.log_mag) - 1.0).norm()
    };
    let ratio = err(64) / err(128);
    assert!((3.0..=5.0).contains(&ratio), "{ratio}");
}

#[test]
fn boundary_relations() {
    let p = params(0.5, 1.0, 1);
    let f = Geometry::new(&p).boundary_frame(0.0);
    assert!(h_boundary_relations(&f, &p).unwrap().1.abs() < 1e-12);

    let p = params(0.25, 1.0, 1);
    let f = Geometry::new(&p).boundary_frame(FRAC_PI_4);
    let (a, b) = h_boundary_relations(&f, &p).unwrap();
    let (ta, tb) = h_boundary_targets(&f);
    assert!((a - ta).abs() < 1e-10 && (b - tb).abs() < 1e-10);

    let tt = 2.5;
    let p = params(0.0, tt, 1);
    let f = Geometry::new(&p).boundary_frame(1.0);
    let (a, b) = h_boundary_relations(&f, &p).unwrap();
    assert!((a + 1.0 / (12.0 * tt)).abs() < 1e-14 && b.abs() < 1e-14);
}

/// `ln |p_n e^{-N(Tg - l/2)}| - (5/12) ln N` maximized over a grid that
/// reaches the focal segment and its endpoints.
fn crude_excess(n: usize) -> f64 {
    let p = params(0.5, 1.0, n);
    let f0 = Geometry::new(&p).foci();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..=60 {
        for j in 0..=30 {
            let z = Complex64::new(-1.5 * f0 + 3.0 * f0 * i as f64 / 60.0, 0.6 * j as f64 / 30.0);
            worst = worst.max(log_normalized_pn(z, &p) - 5.0 / 12.0 * p.big_n().ln());
        }
    }
    worst
}

#[test]
fn crude_bound_with_fitted_constant() {
    let fitted = crude_excess(16).max(crude_excess(32)).exp();
    for n in [64, 128] {
        let c = crude_excess(n).exp();
        assert!(c <= 1.1 * fitted, "n={n}: {c} vs fitted {fitted}");
    }
}

proptest! {
    #[test]
    fn recurrence_residual_small(re in -3.0f64..3.0, im in -3.0f64..3.0, n in 1usize..80) {
        let p = params(0.5, 1.0, n);
        let seq = eval_polys(Complex64::new(re, im), n + 8, &p).unwrap();
        for k in 1..n + 8 {
            prop_assert!(seq.recurrence_residual(k) < 1e-10);
        }
    }
}
