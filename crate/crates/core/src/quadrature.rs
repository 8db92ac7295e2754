//! Gauss–Legendre rules, deterministic summation and planar quadrature on
//! elliptic-polar grids.
//!
//! Planar integrals use `z = phi(R e^{i theta})` with `dA = |phi'(u)|^2 R dR dtheta`.
//! The annulus `sqrt(t) < R < 1` covers the droplet (minus the focal
//! segment, a null set) and `R > 1` covers its exterior. Radial integration
//! is composite Gauss–Legendre with a panel break where the boundary layer
//! ends; angular integration is the periodic trapezoid rule.

use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, OnceLock};
use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::params::EnsembleParams;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1, 1]`,
/// ascending. Cached per order.
pub fn gauss_legendre(order: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&order) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(compute_gauss_legendre(order));
    cache.lock().unwrap().insert(order, Arc::clone(&rule));
    rule
}

fn compute_gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss–Legendre order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss–Legendre on `[a, b]`.
pub fn gauss_legendre_interval(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let nodes = rule.0.iter().map(|x| mid + half * x).collect();
    let weights = rule.1.iter().map(|w| half * w).collect();
    (nodes, weights)
}

/// `int_a^b f` by composite Gauss–Legendre with `panels` equal panels.
pub fn integrate_interval(f: impl Fn(f64) -> f64, a: f64, b: f64, order: usize, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut terms = Vec::with_capacity(order * panels);
    for p in 0..panels {
        let (x, w) = gauss_legendre_interval(order, a + h * p as f64, a + h * (p + 1) as f64);
        terms.extend(x.iter().zip(&w).map(|(x, w)| w * f(*x)));
    }
    pairwise_sum(&terms)
}

/// Recursive pairwise summation; the tree shape depends only on the length,
/// so results are independent of how the terms were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// `k`-th derivative of an analytic `f` at `z` from `m` samples on the
/// circle `|zeta - z| = radius` (trapezoid rule for the Cauchy integral).
///
/// Exact for polynomials of degree `< m + k`, spectrally accurate otherwise.
pub fn contour_derivative(f: impl Fn(Complex64) -> Complex64, z: Complex64, radius: f64, m: usize, k: u32) -> Complex64 {
    let terms: Vec<Complex64> = (0..m)
        .map(|j| {
            let e = Complex64::from_polar(1.0, TAU * j as f64 / m as f64);
            f(z + radius * e) * e.powi(-(k as i32))
        })
        .collect();
    let factorial: f64 = (1..=k).map(f64::from).product();
    pairwise_sum_complex(&terms) * factorial / (m as f64 * radius.powi(k as i32))
}

/// Which part of the plane a planar integral covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// The droplet `K`.
    Interior,
    /// `C \ K`, truncated where `N Omega` exceeds the cutoff.
    Exterior,
    /// Both.
    Plane,
}

/// Resolution and truncation of the elliptic-polar grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Gauss–Legendre nodes per radial panel (two panels per region).
    pub radial_order: usize,
    /// Trapezoid nodes in the angle.
    pub angular: usize,
    /// Exterior truncation: keep `R` while `N Omega(phi(R)) <= cutoff`.
    pub cutoff: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { radial_order: 48, angular: 256, cutoff: 40.0 }
    }
}

impl GridSpec {
    pub fn doubled(&self) -> Self {
        Self { radial_order: 2 * self.radial_order, angular: 2 * self.angular, cutoff: self.cutoff }
    }
}

/// A quadrature node `z` with its area weight.
#[derive(Clone, Copy, Debug)]
pub struct PlanarNode {
    pub z: Complex64,
    pub weight: f64,
}

/// Outer radius (in the `u` plane) of the truncated exterior region.
pub fn exterior_radius(geom: &Geometry, big_n: f64, cutoff: f64) -> f64 {
    let target = cutoff / big_n;
    // Omega(phi(R)) is smallest on the major axis and increases in R there.
    let f = |r: f64| geom.omega_polar(r, 0.0) - target;
    let mut hi = 2.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    hi
}

fn radial_panels(geom: &Geometry, big_n: f64, region: Region, cutoff: f64) -> Vec<(f64, f64)> {
    let t = geom.t();
    let inner = t.sqrt();
    // Width in R of the boundary layer: about six standard deviations of the
    // erfc profile, measured with the smallest |phi'| on the unit circle.
    let layer = 6.0 / (big_n.sqrt() * geom.capacity() * (1.0 - t));
    let mut panels = Vec::new();
    if matches!(region, Region::Interior | Region::Plane) {
        let split = 1.0 - layer;
        if split > inner + 0.05 * (1.0 - inner) {
            panels.push((inner, split));
            panels.push((split, 1.0));
        } else {
            let mid = 0.5 * (inner + 1.0);
            panels.push((inner, mid));
            panels.push((mid, 1.0));
        }
    }
    if matches!(region, Region::Exterior | Region::Plane) {
        let outer = exterior_radius(geom, big_n, cutoff);
        let split = 1.0 + layer;
        if split < outer - 0.05 * (outer - 1.0) {
            panels.push((1.0, split));
            panels.push((split, outer));
        } else {
            let mid = 0.5 * (1.0 + outer);
            panels.push((1.0, mid));
            panels.push((mid, outer));
        }
    }
    panels
}

/// The nodes of the elliptic-polar grid for `region`.
pub fn planar_nodes(params: &EnsembleParams, region: Region, spec: &GridSpec) -> Vec<PlanarNode> {
    let geom = Geometry::new(params);
    let cap = geom.capacity();
    let t = geom.t();
    let dtheta = TAU / spec.angular as f64;
    let angles: Vec<Complex64> = (0..spec.angular)
        .map(|j| Complex64::from_polar(1.0, (j as f64 + 0.5) * dtheta))
        .collect();
    let mut nodes = Vec::new();
    for (a, b) in radial_panels(&geom, params.big_n(), region, spec.cutoff) {
        let (rs, ws) = gauss_legendre_interval(spec.radial_order, a, b);
        for (r, wr) in rs.iter().zip(&ws) {
            for e in &angles {
                let u = *e * *r;
                let z = cap * (u + t / u);
                let dphi = cap * (1.0 - t / (u * u));
                nodes.push(PlanarNode { z, weight: wr * dtheta * dphi.norm_sqr() * r });
            }
        }
    }
    nodes
}

/// `int f dA` for a vector-valued integrand writing `dim` components into
/// its output slice. Node evaluations run in parallel; the reduction is a
/// fixed pairwise tree, so the result does not depend on the thread count.
pub fn integrate_nodes<F>(nodes: &[PlanarNode], dim: usize, f: F) -> Vec<f64>
where
    F: Fn(Complex64, &mut [f64]) + Sync,
{
    let values: Vec<f64> = nodes
        .par_iter()
        .flat_map_iter(|node| {
            let mut buf = vec![0.0; dim];
            f(node.z, &mut buf);
            buf.into_iter().map(move |v| v * node.weight)
        })
        .collect();
    let mut column = vec![0.0; nodes.len()];
    (0..dim)
        .map(|c| {
            for (i, slot) in column.iter_mut().enumerate() {
                *slot = values[i * dim + c];
            }
            pairwise_sum(&column)
        })
        .collect()
}

/// A quadrature result with the difference to the previous refinement level.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: Vec<f64>,
    pub error: f64,
    pub spec: GridSpec,
}

/// Doubles the grid until successive estimates differ by at most
/// `abs_tol + rel_tol * |value|` in every component.
pub fn integrate_refined<F>(
    params: &EnsembleParams,
    region: Region,
    start: GridSpec,
    dim: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_levels: usize,
    f: F,
) -> Result<Estimate>
where
    F: Fn(Complex64, &mut [f64]) + Sync,
{
    let mut spec = start;
    let mut previous = integrate_nodes(&planar_nodes(params, region, &spec), dim, &f);
    for _ in 0..max_levels {
        let next_spec = spec.doubled();
        let current = integrate_nodes(&planar_nodes(params, region, &next_spec), dim, &f);
        let error = previous.iter().zip(&current).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = current.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if error <= abs_tol + rel_tol * scale {
            return Ok(Estimate { value: current, error, spec: next_spec });
        }
        previous = current;
        spec = next_spec;
    }
    Err(Error::CostLimit(format!(
        "planar quadrature did not reach tolerance within {max_levels} refinements"
    )))
}
