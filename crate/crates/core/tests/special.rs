use std::f64::consts::{FRAC_PI_2, PI};

use elliptic_gas::quadrature::integrate_interval;
use elliptic_gas::special::{ellip_e, ellip_k, erf, erfc, log_factorial, logsumexp_accumulate, NeumaierSum};

fn quad(f: impl Fn(f64) -> f64) -> f64 {
    integrate_interval(f, 0.0, FRAC_PI_2, 40, 16)
}

#[test]
fn elliptic_integrals_against_quadrature() {
    for i in 0..50 {
        let k = 0.98 * i as f64 / 49.0;
        let s = |th: f64| 1.0 - (k * th.sin()).powi(2);
        let kq = quad(|th| 1.0 / s(th).sqrt());
        let eq = quad(|th| s(th).sqrt());
        assert!((ellip_k(k).unwrap() - kq).abs() <= 1e-11 * kq, "K({k})");
        assert!((ellip_e(k).unwrap() - eq).abs() <= 1e-11 * eq, "E({k})");
    }
    let k = 2.0 * 0.5f64.sqrt() / 1.5;
    let kq = quad(|th| 1.0 / (1.0 - (k * th.sin()).powi(2)).sqrt());
    assert!((ellip_k(k).unwrap() - kq).abs() <= 1e-12 * kq);
    assert_eq!(ellip_e(1.0).unwrap(), 1.0);
    assert!((ellip_k(0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
    assert!(ellip_k(1.0).is_err() && ellip_e(1.5).is_err());
}

#[test]
fn erfc_examples() {
    assert_eq!(erfc(0.0), 1.0);
    assert!((erfc(1.0) / 0.157_299_207_050_285_13 - 1.0).abs() < 1e-14);
    assert!((erfc(5.0) / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-13);
    assert!((erfc(-2.0) - (2.0 - erfc(2.0))).abs() < 1e-15);
    assert!((erf(0.5) + erfc(0.5) - 1.0).abs() < 1e-15);
    let d = integrate_interval(|t| (-t * t).exp(), 0.0, 3.0, 30, 8) * 2.0 / PI.sqrt();
    assert!((erf(3.0) - d).abs() < 1e-14);
}

#[test]
fn log_factorial_increments() {
    let mut exact = NeumaierSum::default();
    for j in 1..=10_000u64 {
        exact.add((j as f64).ln());
        let got = log_factorial(j);
        assert!((got - exact.value()).abs() <= 1e-13 * exact.value().max(1.0), "j={j}");
        assert!((got - log_factorial(j - 1) - (j as f64).ln()).abs() <= 1e-9, "j={j}");
    }
    assert_eq!(log_factorial(0), 0.0);
}

#[test]
fn logsumexp_examples() {
    assert!((logsumexp_accumulate([1000.0, 1000.0]).unwrap() - (1000.0 + 2f64.ln())).abs() < 1e-12);
    assert!((logsumexp_accumulate([-1000.0, -1001.0]).unwrap() - (-1000.0 + (1.0 + (-1.0f64).exp()).ln())).abs() < 1e-12);
    assert_eq!(logsumexp_accumulate([f64::NEG_INFINITY]).unwrap(), f64::NEG_INFINITY);
    assert!(logsumexp_accumulate(std::iter::empty()).is_err());
    let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 5.0).collect();
    let direct = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
    assert!((logsumexp_accumulate(xs).unwrap() - direct).abs() < 1e-13);
}
