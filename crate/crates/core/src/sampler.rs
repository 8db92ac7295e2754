//! Metropolis sampling of the `n`-particle Coulomb gas
//! `Prob ~ exp(-N E_n)`, `E_n = sum V(z_j) - (2/N) sum_{j<k} ln|z_j - z_k|`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge::arclength_escape_density;
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::params::EnsembleParams;
use crate::quadrature::integrate_interval;

/// Name of the generator recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha), seed_from_u64(seed), stream = chain index";

/// Points closer than this to another particle are never accepted.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub params: EnsembleParams,
    pub seed: u64,
    /// Total sweeps per chain, including burn-in. A sweep proposes one move
    /// for every particle in index order.
    pub sweeps: usize,
    pub burn_in: usize,
    /// Record every `thin`-th sweep after burn-in.
    pub thin: usize,
    pub proposal_scale: f64,
    pub chains: usize,
    /// Equal-arclength bins for boundary projections of outside particles.
    pub bins: usize,
    /// Batches per chain used for blocked variance estimates.
    pub batches: usize,
    /// Recorded configurations kept per chain.
    pub max_configs: usize,
}

impl SamplerConfig {
    pub fn new(params: EnsembleParams, seed: u64, sweeps: usize, chains: usize) -> Self {
        Self {
            params,
            seed,
            sweeps,
            burn_in: sweeps / 10,
            thin: 1,
            proposal_scale: 0.7 / params.big_n().sqrt(),
            chains,
            bins: 35,
            batches: 50,
            max_configs: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in {
            return Err(Error::InvalidParams(format!("sweeps ({}) must exceed burn_in ({})", self.sweeps, self.burn_in)));
        }
        if !(self.proposal_scale > 0.0 && self.proposal_scale.is_finite()) {
            return Err(Error::InvalidParams(format!("proposal_scale must be positive, got {}", self.proposal_scale)));
        }
        if self.thin == 0 || self.chains == 0 || self.bins == 0 || self.batches == 0 {
            return Err(Error::InvalidParams("thin, chains, bins and batches must be positive".into()));
        }
        if (self.sweeps - self.burn_in) / self.thin < self.batches {
            return Err(Error::InvalidParams(format!(
                "need at least {} recorded sweeps per chain for the blocked estimates",
                self.batches
            )));
        }
        Ok(())
    }
}

/// Output of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub mean_outside: f64,
    pub variance_outside: f64,
    pub blocked_stderr: f64,
    pub acceptance_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    /// The first `max_configs` recorded configurations of each chain, in chain order.
    pub configs: Vec<Vec<Complex64>>,
    /// Outside count of every recorded sweep, chains concatenated in order.
    pub outside_counts: Vec<u32>,
    /// Boundary-projection histogram of all outside particles.
    pub arclength_bins: Vec<u64>,
    /// The same histogram split by batch (chain-major).
    pub batch_histograms: Vec<Vec<u64>>,
    pub acceptance_rate: f64,
    /// Set when the acceptance rate is outside `(0.2, 0.7)`.
    pub acceptance_warning: bool,
    pub chains: Vec<ChainSummary>,
    pub mean_outside: f64,
    pub stderr: f64,
    pub r_hat: f64,
    pub rng: String,
}

/// `E_n` of a configuration.
pub fn energy(config: &[Complex64], params: &EnsembleParams) -> f64 {
    let big_n = params.big_n();
    let mut e: f64 = config.iter().map(|&z| params.potential(z)).sum();
    for (j, &a) in config.iter().enumerate() {
        for &b in &config[j + 1..] {
            e -= 2.0 / big_n * (a - b).norm().ln();
        }
    }
    e
}

/// `E_n(config with z_k -> proposed) - E_n(config)`; `+inf` (certain
/// rejection) when `proposed` coincides with another particle.
pub fn energy_delta(config: &[Complex64], index: usize, proposed: Complex64, params: &EnsembleParams) -> f64 {
    let current = config[index];
    if proposed == current {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for (j, &z) in config.iter().enumerate() {
        if j == index {
            continue;
        }
        let d_new = (z - proposed).norm();
        if d_new < COINCIDENCE_TOLERANCE {
            return f64::INFINITY;
        }
        log_sum += (z - current).norm().ln() - d_new.ln();
    }
    params.potential(proposed) - params.potential(current) + 2.0 / params.big_n() * log_sum
}

/// Nearest boundary point of `z`: its angle and the distance to it.
pub fn project_to_boundary(z: Complex64, params: &EnsembleParams) -> (f64, f64) {
    let (theta, offset) = Geometry::new(params).nearest_boundary(z);
    (theta, offset.abs())
}

fn initial_config(geom: &Geometry, n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let cap = geom.capacity();
    let (a, b) = (cap * (1.0 + geom.t()), cap * (1.0 - geom.t()));
    let mut config = Vec::with_capacity(n);
    while config.len() < n {
        let z = Complex64::new(a * (2.0 * rng.random::<f64>() - 1.0), b * (2.0 * rng.random::<f64>() - 1.0));
        if geom.is_inside(z) {
            config.push(z);
        }
    }
    config
}

struct BinMap {
    perimeter: f64,
    bins: usize,
}

impl BinMap {
    fn bin(&self, geom: &Geometry, theta: f64) -> usize {
        let s = geom.arclength(theta);
        ((s / self.perimeter * self.bins as f64) as usize).min(self.bins - 1)
    }
}

struct ChainOutput {
    counts: Vec<u32>,
    histograms: Vec<Vec<u64>>,
    configs: Vec<Vec<Complex64>>,
    accepted: u64,
    proposed: u64,
}

fn run_chain(config: &SamplerConfig, chain: usize) -> ChainOutput {
    let params = &config.params;
    let geom = Geometry::new(params);
    let big_n = params.big_n();
    let n = params.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain as u64);
    let mut z = initial_config(&geom, n, &mut rng);
    let recorded = (config.sweeps - config.burn_in) / config.thin;
    let binmap = BinMap { perimeter: geom.perimeter(), bins: config.bins };
    let mut out = ChainOutput {
        counts: Vec::with_capacity(recorded),
        histograms: vec![vec![0; config.bins]; config.batches],
        configs: Vec::new(),
        accepted: 0,
        proposed: 0,
    };
    for sweep in 0..config.sweeps {
        for k in 0..n {
            let step = Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
            let proposed = z[k] + config.proposal_scale * step;
            let u: f64 = rng.random();
            let delta = energy_delta(&z, k, proposed, params);
            out.proposed += 1;
            if u < (-big_n * delta).exp() {
                z[k] = proposed;
                out.accepted += 1;
            }
        }
        if sweep < config.burn_in || (sweep - config.burn_in) % config.thin != 0 {
            continue;
        }
        let index = out.counts.len();
        if index >= recorded {
            continue;
        }
        let batch = index * config.batches / recorded;
        let mut outside = 0u32;
        for &p in &z {
            if !geom.is_inside(p) {
                outside += 1;
                let (theta, _) = geom.nearest_boundary(p);
                out.histograms[batch][binmap.bin(&geom, theta)] += 1;
            }
        }
        out.counts.push(outside);
        if out.configs.len() < config.max_configs {
            out.configs.push(z.clone());
        }
    }
    out
}

/// Standard error of the mean of a correlated series by the blocking
/// method: repeatedly average adjacent pairs and take the largest naive
/// standard error among levels with at least 32 blocks.
pub fn blocked_stderr(series: &[f64]) -> f64 {
    let mut data: Vec<f64> = series.to_vec();
    let mut best: f64 = 0.0;
    while data.len() >= 32 {
        let m = data.len() as f64;
        let mean = data.iter().sum::<f64>() / m;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        best = best.max((var / m).sqrt());
        data = data.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    }
    best
}

/// Gelman–Rubin potential scale reduction factor for equal-length chains.
pub fn gelman_rubin(chains: &[&[f64]]) -> f64 {
    let m = chains.len() as f64;
    let len = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if chains.len() < 2 || len < 2 {
        return f64::NAN;
    }
    let nlen = len as f64;
    let means: Vec<f64> = chains.iter().map(|c| c[..len].iter().sum::<f64>() / nlen).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = nlen / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c[..len].iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nlen - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((nlen - 1.0) / nlen * w + b / nlen) / w).sqrt()
}

/// Runs all chains in parallel; the output depends only on `config`.
pub fn run(config: &SamplerConfig) -> Result<SampleBatch> {
    config.validate()?;
    let outputs: Vec<ChainOutput> = (0..config.chains).into_par_iter().map(|c| run_chain(config, c)).collect();
    let series: Vec<Vec<f64>> = outputs.iter().map(|o| o.counts.iter().map(|&c| c as f64).collect()).collect();
    let chains: Vec<ChainSummary> = outputs
        .iter()
        .zip(&series)
        .map(|(o, s)| {
            let m = s.len() as f64;
            let mean = s.iter().sum::<f64>() / m;
            let variance = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            ChainSummary {
                mean_outside: mean,
                variance_outside: variance,
                blocked_stderr: blocked_stderr(s),
                acceptance_rate: o.accepted as f64 / o.proposed as f64,
            }
        })
        .collect();
    let k = chains.len() as f64;
    let mean_outside = chains.iter().map(|c| c.mean_outside).sum::<f64>() / k;
    let stderr = chains.iter().map(|c| c.blocked_stderr.powi(2)).sum::<f64>().sqrt() / k;
    let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
    let r_hat = gelman_rubin(&refs);
    let accepted: u64 = outputs.iter().map(|o| o.accepted).sum();
    let proposed: u64 = outputs.iter().map(|o| o.proposed).sum();
    let acceptance_rate = accepted as f64 / proposed as f64;
    let mut arclength_bins = vec![0u64; config.bins];
    let mut batch_histograms = Vec::new();
    let mut outside_counts = Vec::new();
    let mut configs = Vec::new();
    for o in outputs {
        for h in &o.histograms {
            for (total, v) in arclength_bins.iter_mut().zip(h) {
                *total += v;
            }
        }
        batch_histograms.extend(o.histograms);
        outside_counts.extend(o.counts);
        configs.extend(o.configs);
    }
    Ok(SampleBatch {
        configs,
        outside_counts,
        arclength_bins,
        batch_histograms,
        acceptance_rate,
        acceptance_warning: !(0.2..0.7).contains(&acceptance_rate),
        chains,
        mean_outside,
        stderr,
        r_hat,
        rng: RNG_NAME.to_string(),
    })
}

/// Fraction of the escape density falling into each of `bins`
/// equal-arclength bins.
pub fn expected_bin_shape(params: &EnsembleParams, bins: usize) -> Vec<f64> {
    let geom = Geometry::new(params);
    let perimeter = geom.perimeter();
    let masses: Vec<f64> = (0..bins)
        .map(|b| {
            let th0 = geom.theta_at_arclength(perimeter * b as f64 / bins as f64);
            let th1 = if b + 1 == bins {
                std::f64::consts::TAU
            } else {
                geom.theta_at_arclength(perimeter * (b + 1) as f64 / bins as f64)
            };
            integrate_interval(|th| arclength_escape_density(th, params) * geom.speed(th), th0, th1, 24, 2)
        })
        .collect();
    let total: f64 = masses.iter().sum();
    masses.into_iter().map(|m| m / total).collect()
}

/// Shape-normalized chi-square of the projection histogram against the
/// escape density, with per-bin variances from batch means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramTest {
    pub chi2: f64,
    pub dof: usize,
    pub escapers: u64,
    pub expected: Vec<f64>,
}

impl HistogramTest {
    pub fn per_dof(&self) -> f64 {
        self.chi2 / self.dof as f64
    }
}

pub fn histogram_chi2(batch: &SampleBatch, params: &EnsembleParams) -> Result<HistogramTest> {
    let bins = batch.arclength_bins.len();
    let nb = batch.batch_histograms.len();
    if bins < 2 || nb < 2 {
        return Err(Error::InvalidParams("need at least two bins and two batches".into()));
    }
    let shape = expected_bin_shape(params, bins);
    let escapers: u64 = batch.arclength_bins.iter().sum();
    let mut chi2 = 0.0;
    for i in 0..bins {
        let residuals: Vec<f64> = batch
            .batch_histograms
            .iter()
            .map(|h| h[i] as f64 - shape[i] * h.iter().sum::<u64>() as f64)
            .collect();
        let total: f64 = residuals.iter().sum();
        let mean = total / nb as f64;
        let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nb as f64 - 1.0) * nb as f64;
        if var > 0.0 {
            chi2 += total * total / var;
        }
    }
    Ok(HistogramTest {
        chi2,
        dof: bins - 1,
        escapers,
        expected: shape.iter().map(|s| s * escapers as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t: f64, tt: f64, n: usize) -> EnsembleParams {
        EnsembleParams::new(t, tt, n).unwrap()
    }

    #[test]
    fn delta_trivial_cases() {
        let p = params(0.5, 1.0, 3);
        let c = vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.5), Complex64::new(0.7, -0.1)];
        assert_eq!(energy_delta(&c, 1, c[1], &p), 0.0);
        assert_eq!(energy_delta(&c, 1, c[2], &p), f64::INFINITY);
        let p1 = params(0.5, 1.0, 1);
        let one = [Complex64::new(0.4, 0.1)];
        let z = Complex64::new(-0.2, 0.9);
        assert_eq!(energy_delta(&one, 0, z, &p1), p1.potential(z) - p1.potential(one[0]));
    }

    #[test]
    fn delta_matches_full_energy() {
        let p = params(0.5, 1.0, 3);
        let c = vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.5), Complex64::new(0.7, -0.1)];
        let z = Complex64::new(0.25, -0.6);
        let mut moved = c.clone();
        moved[2] = z;
        let want = energy(&moved, &p) - energy(&c, &p);
        let got = energy_delta(&c, 2, z, &p);
        assert!((got - want).abs() < 1e-10 * want.abs().max(1e-3));
    }

    #[test]
    fn projection_on_normal_ray() {
        let p = params(0.5, 1.0, 4);
        let g = Geometry::new(&p);
        let f = g.boundary_frame(0.0);
        let (theta, d) = project_to_boundary(f.z0 + 0.3 * f.normal, &p);
        assert!(theta.min(std::f64::consts::TAU - theta) < 1e-10);
        assert!((d - 0.3).abs() < 1e-12);
        let pc = params(0.0, 1.0, 4);
        let z = Complex64::from_polar(1.7, 2.2);
        assert!((project_to_boundary(z, &pc).0 - 2.2).abs() < 1e-14);
    }

    #[test]
    fn blocking_of_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..4096).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let se = blocked_stderr(&xs);
        assert!((se * 64.0 - 1.0).abs() < 0.3, "{se}");
    }

    #[test]
    fn gelman_rubin_identical_chains() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((gelman_rubin(&[&a, &a]) - (0.75f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn run_is_reproducible() {
        let mut cfg = SamplerConfig::new(params(0.5, 1.0, 3), 11, 400, 2);
        cfg.batches = 10;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.outside_counts.len(), 2 * 360);
        assert!(a.outside_counts.iter().all(|&c| c <= 3));
        assert_eq!(a.arclength_bins.iter().sum::<u64>(), a.outside_counts.iter().map(|&c| c as u64).sum::<u64>());
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = SamplerConfig::new(params(0.5, 1.0, 3), 1, 100, 1);
        cfg.burn_in = 100;
        assert!(run(&cfg).is_err());
    }

    #[test]
    fn expected_shape_sums_to_one() {
        let s = expected_bin_shape(&params(0.5, 1.0, 64), 35);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let c = expected_bin_shape(&params(0.0, 1.0, 64), 35);
        assert!(c.iter().all(|x| (x - 1.0 / 35.0).abs() < 1e-12));
    }
}
