//! Exact finite-`n` density, kernel, pre-kernel, Christoffel–Darboux
//! gradient, Cauchy transform and outside mass.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::orthopoly::{eval_pair, Recurrence};
use crate::params::EnsembleParams;
use crate::quadrature::{
    contour_derivative, gauss_legendre_interval, integrate_nodes, integrate_refined, pairwise_sum_complex, planar_nodes, GridSpec,
    Region,
};
use crate::scaled::ScaledComplex;

/// Largest `n` accepted by the quadrature-based routines.
pub const MAX_EXACT_N: usize = 512;

/// `K_n(z, w)` or `𝒦_n(z, w)`, stored in scaled form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub z: Complex64,
    pub w: Complex64,
    pub value: ScaledComplex,
}

impl KernelValue {
    pub fn to_complex(&self) -> Complex64 {
        self.value.to_complex()
    }
}

/// Density values at a set of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub points: Vec<(Complex64, f64)>,
    pub params: EnsembleParams,
    /// `int rho_n dA` over the plane, which equals `T`.
    pub normalization: f64,
}

/// Running sum `sum_j a_j`, with the terms supplied as `value * e^{log_scale}`
/// and `log_scale` allowed to change between terms.
struct ScaledAccumulator {
    sum: Complex64,
    log_ref: f64,
}

impl ScaledAccumulator {
    fn new() -> Self {
        Self { sum: Complex64::new(0.0, 0.0), log_ref: 0.0 }
    }

    fn add(&mut self, value: Complex64, log_scale: f64) {
        if log_scale != self.log_ref {
            self.sum *= (self.log_ref - log_scale).exp();
            self.log_ref = log_scale;
        }
        self.sum += value;
    }

    fn value(&self, extra_log: f64) -> ScaledComplex {
        ScaledComplex::from_complex(self.sum).scale_log(self.log_ref + extra_log)
    }
}

/// `rho_n(z) = (1/N) sum_{j<n} |p_j(z)|^2 e^{-N V(z)}`.
pub fn density(z: Complex64, params: &EnsembleParams) -> f64 {
    let mut rec = Recurrence::new(z, params);
    let mut acc = ScaledAccumulator::new();
    for j in 0..params.n() {
        if j > 0 {
            rec.advance();
        }
        let (p, _, log_scale) = rec.scaled();
        acc.add(Complex64::new(p.norm_sqr(), 0.0), 2.0 * log_scale);
    }
    let big_n = params.big_n();
    acc.value(-big_n * params.potential(z) - big_n.ln()).to_complex().re
}

/// Density at several points, evaluated in parallel.
pub fn density_profile(points: &[Complex64], params: &EnsembleParams) -> Result<DensityProfile> {
    use rayon::prelude::*;
    let values: Vec<(Complex64, f64)> = points.par_iter().map(|&z| (z, density(z, params))).collect();
    let normalization = total_mass(params)?;
    Ok(DensityProfile { points: values, params: *params, normalization })
}

/// `int rho_n dA` over the plane by planar quadrature.
pub fn total_mass(params: &EnsembleParams) -> Result<f64> {
    check_cost(params)?;
    let est = integrate_refined(params, Region::Plane, GridSpec::default(), 1, 1e-9, 1e-9, 3, |z, out| {
        out[0] = density(z, params);
    })?;
    Ok(est.value[0])
}

fn check_cost(params: &EnsembleParams) -> Result<()> {
    if params.n() > MAX_EXACT_N {
        return Err(Error::CostLimit(format!("n = {} exceeds the limit {MAX_EXACT_N} for exact quadrature", params.n())));
    }
    Ok(())
}

/// `sum_{j<n} p_j(z) conj(p_j(w))`.
fn polynomial_sum(z: Complex64, w: Complex64, params: &EnsembleParams) -> ScaledComplex {
    let mut rz = Recurrence::new(z, params);
    let mut rw = Recurrence::new(w, params);
    let mut acc = ScaledAccumulator::new();
    for j in 0..params.n() {
        if j > 0 {
            rz.advance();
            rw.advance();
        }
        let (pz, _, lz) = rz.scaled();
        let (pw, _, lw) = rw.scaled();
        acc.add(pz * pw.conj(), lz + lw);
    }
    acc.value(0.0)
}

/// `K_n(z, w) = sum_{j<n} p_j(z) conj(p_j(w)) e^{-N V(z)/2 - N V(w)/2}`.
pub fn kernel(z: Complex64, w: Complex64, params: &EnsembleParams) -> KernelValue {
    let big_n = params.big_n();
    let weight = -0.5 * big_n * (params.potential(z) + params.potential(w));
    KernelValue { z, w, value: polynomial_sum(z, w, params).scale_log(weight) }
}

fn prekernel_exponent(z: Complex64, w: Complex64, params: &EnsembleParams) -> Complex64 {
    let t = params.t();
    let wb = w.conj();
    -params.big_n() * (z * wb - 0.5 * t * z * z - 0.5 * t * wb * wb)
}

/// `𝒦_n(z, w) = sum_{j<n} p_j(z) conj(p_j(w)) e^{-N (z conj(w) - t z^2/2 - t conj(w)^2/2)}`,
/// analytic in `z` and anti-analytic in `w`.
pub fn prekernel(z: Complex64, w: Complex64, params: &EnsembleParams) -> KernelValue {
    let value = polynomial_sum(z, w, params) * ScaledComplex::from_log(prekernel_exponent(z, w, params));
    KernelValue { z, w, value }
}

/// Right side of the Christoffel–Darboux identity for `(1/N) d𝒦_n(z, w)/dz`:
/// `sqrt(T / (1 - t^2)) (t p_n(z) conj(p_{n-1}(w)) - p_{n-1}(z) conj(p_n(w))) e^{-N(...)}`.
pub fn cd_identity_rhs(z: Complex64, w: Complex64, params: &EnsembleParams) -> ScaledComplex {
    let t = params.t();
    let n = params.n();
    let (pz, qz, lz) = eval_pair(z, n, params);
    let (pw, qw, lw) = eval_pair(w, n, params);
    let c = (params.total_mass() / (1.0 - t * t)).sqrt();
    let inner = c * (t * pz * qw.conj() - qz * pw.conj());
    ScaledComplex::from_complex(inner).scale_log(lz + lw) * ScaledComplex::from_log(prekernel_exponent(z, w, params))
}

/// `(1/N) d𝒦_n(z, w)/dz` by a Cauchy-integral derivative in `z`.
pub fn prekernel_dz(z: Complex64, w: Complex64, params: &EnsembleParams) -> ScaledComplex {
    let centre = prekernel(z, w, params).value;
    let log_ref = if centre.is_zero() { 0.0 } else { centre.log_mag };
    let radius = 0.2 / (1.0 + params.big_n().sqrt());
    let m = 2 * params.n() + 32;
    let d = contour_derivative(|zeta| prekernel(zeta, w, params).value.scaled_by(log_ref), z, radius, m, 1);
    ScaledComplex::from_complex(d / params.big_n()).scale_log(log_ref)
}

/// `d rho_n / dz = sqrt(T / (1 - t^2)) (t p_n conj(p_{n-1}) - p_{n-1} conj(p_n)) e^{-N V}`.
pub fn density_gradient_cd(z: Complex64, params: &EnsembleParams) -> Complex64 {
    let t = params.t();
    let (p, q, l) = eval_pair(z, params.n(), params);
    let c = (params.total_mass() / (1.0 - t * t)).sqrt();
    let inner = c * (t * p * q.conj() - q * p.conj());
    ScaledComplex::from_complex(inner).scale_log(2.0 * l - params.big_n() * params.potential(z)).to_complex()
}

/// Derivative of `rho_n` along the real direction `v` (`|v| = 1`): `2 Re(v drho/dz)`.
pub fn directional_derivative(z: Complex64, v: Complex64, params: &EnsembleParams) -> f64 {
    2.0 * (v * density_gradient_cd(z, params)).re
}

/// `|p_n(w)|^2 e^{-N V(w)}`.
pub fn weighted_pn_squared(w: Complex64, params: &EnsembleParams) -> f64 {
    let (p, _, l) = eval_pair(w, params.n(), params);
    ScaledComplex::from_complex(Complex64::new(p.norm_sqr(), 0.0))
        .scale_log(2.0 * l - params.big_n() * params.potential(w))
        .to_complex()
        .re
}

/// Cauchy transform of `|p_n|^2 e^{-NV}` with its quadrature diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyTransform {
    pub value: Complex64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    /// The same quadrature with numerator 1 in place of `1/(z - w)`.
    pub normalization: f64,
}

const CAUCHY_MIN_DISTANCE: f64 = 0.1;
const CUTOFF_RADIUS: f64 = 0.04;
const CAUCHY_TOLERANCE: f64 = 1e-14;
const CAUCHY_LEVELS: usize = 2;

fn cutoff(r: f64) -> f64 {
    (-(r / CUTOFF_RADIUS).powi(8)).exp()
}

/// `int |p_n(w)|^2 e^{-N V(w)} / (z - w) dA(w)` for `z` inside the droplet.
///
/// The integrand is split with the cutoff `chi(|w - z|)`; the part carrying
/// `1 - chi` is smooth and goes on the global grid, the part carrying `chi`
/// is integrated in polar coordinates around `z`, where `dA / (z - w)` is
/// `-e^{-i alpha} dr d alpha`.
pub fn cauchy_transform(z: Complex64, params: &EnsembleParams) -> Result<CauchyTransform> {
    check_cost(params)?;
    let geom = Geometry::new(params);
    let (theta, offset) = geom.nearest_boundary(z);
    let dist = (z - geom.boundary_point(theta)).norm();
    if offset > 0.0 || dist < CAUCHY_MIN_DISTANCE {
        return Err(Error::TooCloseToBoundary { dist: if offset > 0.0 { -dist } else { dist }, min: CAUCHY_MIN_DISTANCE });
    }
    let integrand = |w: Complex64, out: &mut [f64]| {
        let f = weighted_pn_squared(w, params);
        let d = z - w;
        let outer = (1.0 - cutoff(d.norm())) / d;
        out[0] = f * outer.re;
        out[1] = f * outer.im;
        out[2] = f;
    };
    let mut spec = GridSpec::default();
    let mut previous = integrate_nodes(&planar_nodes(params, Region::Plane, &spec), 3, integrand);
    let mut error = f64::INFINITY;
    for _ in 0..CAUCHY_LEVELS {
        spec = spec.doubled();
        let current = integrate_nodes(&planar_nodes(params, Region::Plane, &spec), 3, integrand);
        error = Complex64::new(current[0] - previous[0], current[1] - previous[1]).norm();
        previous = current;
        if error <= CAUCHY_TOLERANCE {
            break;
        }
    }
    let (rs, wr) = gauss_legendre_interval(64, 0.0, 2.0 * CUTOFF_RADIUS);
    let m = 64;
    let mut local = Vec::with_capacity(rs.len() * m);
    for (r, w_r) in rs.iter().zip(&wr) {
        for k in 0..m {
            let alpha = (k as f64 + 0.5) * TAU / m as f64;
            let e = Complex64::from_polar(1.0, alpha);
            let f = weighted_pn_squared(z + *r * e, params);
            local.push(-f * cutoff(*r) * e.conj() * *w_r * (TAU / m as f64));
        }
    }
    let value = Complex64::new(previous[0], previous[1]) + pairwise_sum_complex(&local);
    Ok(CauchyTransform { value, error, normalization: previous[2] })
}

/// Expected number of particles outside the droplet, with the interior
/// cross-check `N int_K (1/pi - rho_n) dA`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutsideExact {
    pub n_out: f64,
    pub interior_estimate: f64,
    pub error: f64,
}

/// `N int_{C \ K} rho_n dA` by elliptic-polar quadrature.
pub fn expected_outside_exact(params: &EnsembleParams) -> Result<OutsideExact> {
    check_cost(params)?;
    let big_n = params.big_n();
    let exterior = integrate_refined(params, Region::Exterior, GridSpec::default(), 1, 1e-9, 1e-9, 3, |z, out| {
        out[0] = density(z, params);
    })?;
    let interior = integrate_refined(params, Region::Interior, GridSpec::default(), 1, 1e-9, 1e-9, 3, |z, out| {
        out[0] = 1.0 / PI - density(z, params);
    })?;
    Ok(OutsideExact {
        n_out: big_n * exterior.value[0],
        interior_estimate: big_n * interior.value[0],
        error: big_n * (exterior.error + interior.error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t: f64, tt: f64, n: usize) -> EnsembleParams {
        EnsembleParams::new(t, tt, n).unwrap()
    }

    #[test]
    fn density_at_origin_series() {
        let p = params(0.5, 1.0, 8);
        let t: f64 = 0.5;
        let mut sum = 0.0;
        let mut term = 1.0;
        for l in 0..=3u32 {
            if l > 0 {
                let l = l as f64;
                term *= (t / 2.0).powi(2) * (2.0 * l) * (2.0 * l - 1.0) / (l * l);
            }
            sum += term;
        }
        let want = (1.0 - t * t).sqrt() / PI * sum;
        let got = density(Complex64::new(0.0, 0.0), &p);
        assert!((got - want).abs() < 1e-14, "{got} vs {want}");
    }

    #[test]
    fn kernel_diagonal_and_symmetry() {
        let p = params(0.5, 1.0, 20);
        let z = Complex64::new(0.7, 0.3);
        let w = Complex64::new(-0.2, 0.9);
        let diag = kernel(z, z, &p).to_complex();
        assert!((diag.re / p.big_n() - density(z, &p)).abs() < 1e-13);
        assert!(diag.im.abs() < 1e-13);
        let a = kernel(z, w, &p).to_complex();
        let b = kernel(w, z, &p).to_complex();
        assert!((a - b.conj()).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn gradient_vanishes_at_origin() {
        let p = params(0.5, 1.0, 9);
        assert_eq!(density_gradient_cd(Complex64::new(0.0, 0.0), &p).norm(), 0.0);
    }

    #[test]
    fn cd_identity_at_a_pair() {
        let p = params(0.5, 1.0, 16);
        let z = Complex64::new(1.1, 0.4);
        let w = Complex64::new(0.9, -0.3);
        let lhs = prekernel_dz(z, w, &p).to_complex();
        let rhs = cd_identity_rhs(z, w, &p).to_complex();
        assert!((lhs - rhs).norm() < 1e-9 * rhs.norm(), "{lhs} vs {rhs}");
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let p = params(0.5, 1.0, 32);
        let z = Complex64::new(0.5, 0.0);
        let h = 1e-5;
        let dx = (density(z + h, &p) - density(z - h, &p)) / (2.0 * h);
        let dy = (density(z + Complex64::new(0.0, h), &p) - density(z - Complex64::new(0.0, h), &p)) / (2.0 * h);
        let fd = Complex64::new(0.5 * dx, -0.5 * dy);
        let cd = density_gradient_cd(z, &p);
        assert!((fd - cd).norm() <= 1e-6 * cd.norm().max(1e-3), "{fd} vs {cd}");
    }

    #[test]
    fn cauchy_rejects_boundary_points() {
        let p = params(0.5, 1.0, 8);
        assert!(cauchy_transform(Complex64::new(1.7, 0.0), &p).is_err());
        assert!(cauchy_transform(Complex64::new(3.0, 0.0), &p).is_err());
    }

    #[test]
    fn outside_exact_rejects_large_n() {
        let p = params(0.5, 1.0, 513);
        assert!(matches!(expected_outside_exact(&p), Err(Error::CostLimit(_))));
    }
}
