//! The twelve acceptance criteria at their stated tolerances. Each prints one
//! PASS/FAIL line; the test fails if any criterion fails.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use elliptic_gas::validation::{
    arclength_histogram, boundary_geometry, boundary_value, bulk_decay, christoffel_darboux, edge_profile, mcmc_outside,
    normalization, omega_taylor, table_asymptotic, table_exact, wkb_order, Check,
};

fn criteria() -> Vec<(&'static str, Box<dyn Fn() -> Check>)> {
    vec![
        ("1 table exact outside counts", Box::new(table_exact)),
        ("2 table asymptotic outside counts", Box::new(table_asymptotic)),
        ("3 edge profile t=0.5", Box::new(|| edge_profile(0.5, &[0.0, FRAC_PI_4], &[256, 512, 1024], Some(5.0)))),
        ("4 boundary density value", Box::new(boundary_value)),
        ("5 Christoffel-Darboux identity and gradient", Box::new(christoffel_darboux)),
        ("6 bulk exponential decay", Box::new(bulk_decay)),
        ("7 WKB error order", Box::new(wkb_order)),
        ("8 boundary geometry", Box::new(boundary_geometry)),
        ("9 Omega Taylor order", Box::new(omega_taylor)),
        ("10 MCMC outside count, 4 x 10^6 sweeps", Box::new(|| mcmc_outside(1_000_000))),
        ("11 arclength histogram", Box::new(|| arclength_histogram(30_000))),
        ("12 normalization and orthonormality", Box::new(normalization)),
    ]
}

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for (label, criterion) in criteria() {
        let start = Instant::now();
        let c = criterion();
        println!(
            "{} criterion {label}: {:.4e} (bound {:.4e}) {} [{:.1}s]",
            if c.pass { "PASS" } else { "FAIL" },
            c.value,
            c.bound,
            c.detail,
            start.elapsed().as_secs_f64()
        );
        if !c.pass {
            failed.push(label);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
