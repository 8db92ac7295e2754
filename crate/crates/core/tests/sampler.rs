use std::f64::consts::TAU;

use elliptic_gas::sampler::{energy, energy_delta, project_to_boundary, run, SamplerConfig};
use elliptic_gas::{EnsembleParams, Geometry};
use num_complex::Complex64;
use proptest::prelude::*;

fn params(t: f64, tt: f64, n: usize) -> EnsembleParams {
    EnsembleParams::new(t, tt, n).unwrap()
}

#[test]
fn single_particle_outside_probability() {
    let p = params(0.0, 1.0, 1);
    let batch = run(&SamplerConfig::new(p, 99, 400_000, 4)).unwrap();
    let exact = (-1.0f64).exp();
    assert!((batch.mean_outside - exact).abs() < 3.0 * batch.stderr, "{} +- {} vs {exact}", batch.mean_outside, batch.stderr);
    assert!(batch.r_hat < 1.05);
}

#[test]
fn sixteen_particles_match_table() {
    let p = params(0.5, 1.0, 16);
    let batch = run(&SamplerConfig::new(p, 7, 150_000, 4)).unwrap();
    let want = 1.94876;
    assert!((batch.mean_outside - want).abs() < 3.0 * batch.stderr, "{} +- {}", batch.mean_outside, batch.stderr);
    assert!(batch.stderr < 0.01);
    assert!(!batch.acceptance_warning, "{}", batch.acceptance_rate);
}

#[test]
fn batch_bookkeeping() {
    let p = params(0.5, 1.0, 6);
    let cfg = SamplerConfig::new(p, 1, 3000, 3);
    let batch = run(&cfg).unwrap();
    assert!(batch.outside_counts.iter().all(|&c| c as usize <= p.n()));
    let outside: u64 = batch.outside_counts.iter().map(|&c| c as u64).sum();
    assert_eq!(batch.arclength_bins.iter().sum::<u64>(), outside);
    assert_eq!(batch.batch_histograms.iter().flatten().sum::<u64>(), outside);
    assert_eq!(batch.chains.len(), 3);
    assert!(batch.configs.iter().all(|c| c.len() == p.n()));
    assert_eq!(batch, run(&cfg).unwrap());
    let mut other = cfg.clone();
    other.seed = 2;
    assert_ne!(batch.outside_counts, run(&other).unwrap().outside_counts);
}

#[test]
fn projection_examples() {
    let p = params(0.5, 1.0, 1);
    let g = Geometry::new(&p);
    let f = g.boundary_frame(0.0);
    let (theta, dist) = project_to_boundary(f.z0 + 0.3 * f.normal, &p);
    assert!(theta.abs() < 1e-10 || (theta - TAU).abs() < 1e-10);
    assert!((dist - 0.3).abs() < 1e-10);

    let p0 = params(0.0, 1.0, 1);
    let z = Complex64::from_polar(1.7, 2.2);
    assert!((project_to_boundary(z, &p0).0 - 2.2).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_nearest_point(r in 1.05f64..3.0, a in 0.0f64..TAU, t in 0.0f64..0.8) {
        let p = params(t, 1.0, 1);
        let g = Geometry::new(&p);
        let u = Complex64::from_polar(r, a);
        let z = g.boundary_point(a) * r;
        prop_assume!(!g.is_inside(z));
        let (theta, dist) = project_to_boundary(z, &p);
        let f = g.boundary_frame(theta);
        let d = z - f.z0;
        prop_assert!((d.re * f.tangent.re + d.im * f.tangent.im).abs() <= 1e-10 * d.norm().max(1.0));
        let scan = (0..20_000).map(|k| (z - g.boundary_point(TAU * k as f64 / 20_000.0)).norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(dist <= scan + 1e-12, "{u} {dist} {scan}");
        prop_assert!(scan - dist < 1e-6);
    }

    #[test]
    fn delta_matches_energy_difference(
        xs in proptest::collection::vec((-1.5f64..1.5, -1.5f64..1.5), 2..12),
        i in 0usize..12,
        mv in (-0.5f64..0.5, -0.5f64..0.5),
    ) {
        let p = params(0.5, 1.0, xs.len());
        let config: Vec<Complex64> = xs.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let i = i % config.len();
        let z = config[i] + Complex64::new(mv.0, mv.1);
        let mut moved = config.clone();
        moved[i] = z;
        let full = energy(&moved, &p) - energy(&config, &p);
        let delta = energy_delta(&config, i, z, &p);
        let scale = energy(&moved, &p).abs().max(energy(&config, &p).abs()).max(1.0);
        prop_assert!((full - delta).abs() <= 1e-10 * scale);
    }
}
