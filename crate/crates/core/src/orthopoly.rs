//! Orthonormal polynomials `p_j` for the weight `e^{-N V}`: exact values by
//! the scaled three-term recurrence and the large-`N` WKB expansion.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::params::EnsembleParams;
use crate::quadrature::contour_derivative;
use crate::scaled::ScaledComplex;
use crate::special::log_factorial;

const RESCALE_HIGH: f64 = 1e100;
const RESCALE_LOW: f64 = 1e-100;

/// `ln gamma_j`, the log of the (positive) leading coefficient of `p_j`:
/// `gamma_j = N^{1/4} (N (1 - t^2))^{(j + 1/2)/2} / sqrt(pi j!)`.
pub fn gamma_exact(j: u64, params: &EnsembleParams) -> f64 {
    let big_n = params.big_n();
    let t = params.t();
    0.25 * big_n.ln() + 0.5 * (j as f64 + 0.5) * (big_n * (1.0 - t * t)).ln() - 0.5 * PI.ln() - 0.5 * log_factorial(j)
}

/// Forward three-term recurrence
/// `p_{k+1} = (z p_k - t r_k p_{k-1}) / r_{k+1}`, `r_k = sqrt(k / (N (1 - t^2)))`,
/// carrying a common log-scale so that `p_k = current * e^{log_scale}`.
#[derive(Clone, Debug)]
pub struct Recurrence {
    z: Complex64,
    t: f64,
    inv_n_one_minus: f64,
    k: usize,
    previous: Complex64,
    current: Complex64,
    log_scale: f64,
}

impl Recurrence {
    pub fn new(z: Complex64, params: &EnsembleParams) -> Self {
        let t = params.t();
        let big_n = params.big_n();
        let one_m = 1.0 - t * t;
        let gamma0 = (big_n * one_m.sqrt() / PI).sqrt();
        Self {
            z,
            t,
            inv_n_one_minus: 1.0 / (big_n * one_m),
            k: 0,
            previous: Complex64::new(0.0, 0.0),
            current: Complex64::new(gamma0, 0.0),
            log_scale: 0.0,
        }
    }

    /// Degree of the polynomial held in `current`.
    pub fn degree(&self) -> usize {
        self.k
    }

    /// `(p_k, p_{k-1})` divided by `e^{log_scale}`, and `log_scale`.
    pub fn scaled(&self) -> (Complex64, Complex64, f64) {
        (self.current, self.previous, self.log_scale)
    }

    pub fn value(&self) -> ScaledComplex {
        ScaledComplex::from_complex(self.current).scale_log(self.log_scale)
    }

    pub fn previous_value(&self) -> ScaledComplex {
        ScaledComplex::from_complex(self.previous).scale_log(self.log_scale)
    }

    fn r(&self, k: usize) -> f64 {
        (k as f64 * self.inv_n_one_minus).sqrt()
    }

    pub fn advance(&mut self) {
        let next = (self.z * self.current - self.t * self.r(self.k) * self.previous) / self.r(self.k + 1);
        self.previous = self.current;
        self.current = next;
        self.k += 1;
        let size = self.current.norm().max(self.previous.norm());
        if !(RESCALE_LOW..=RESCALE_HIGH).contains(&size) && size > 0.0 {
            self.previous /= size;
            self.current /= size;
            self.log_scale += size.ln();
        }
    }
}

/// `p_0(z), ..., p_jmax(z)` at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySequence {
    pub z: Complex64,
    pub values: Vec<ScaledComplex>,
    pub params: EnsembleParams,
}

impl PolySequence {
    /// Relative residual of the recurrence at index `1 <= k < jmax`.
    pub fn recurrence_residual(&self, k: usize) -> f64 {
        let p = &self.params;
        let inv = 1.0 / (p.big_n() * (1.0 - p.t() * p.t()));
        let r = |k: usize| (k as f64 * inv).sqrt();
        let log_ref = self.values[k].log_mag;
        let at = |j: usize| self.values[j].scaled_by(log_ref);
        let lhs = self.z * at(k);
        let rhs = r(k + 1) * at(k + 1) + p.t() * r(k) * at(k - 1);
        let scale = lhs.norm() + (r(k + 1) * at(k + 1)).norm() + (p.t() * r(k) * at(k - 1)).norm();
        (lhs - rhs).norm() / scale
    }
}

/// Exact `p_j(z)` for `j = 0..=jmax`, `jmax <= n + 8`.
pub fn eval_polys(z: Complex64, jmax: usize, params: &EnsembleParams) -> Result<PolySequence> {
    if jmax > params.n() + 8 {
        return Err(Error::InvalidParams(format!("jmax must satisfy jmax <= n + 8 = {}, got {jmax}", params.n() + 8)));
    }
    let mut rec = Recurrence::new(z, params);
    let mut values = Vec::with_capacity(jmax + 1);
    values.push(rec.value());
    for _ in 0..jmax {
        rec.advance();
        values.push(rec.value());
    }
    Ok(PolySequence { z, values, params: *params })
}

/// `p_k(z)` alone.
pub fn eval_poly(z: Complex64, k: usize, params: &EnsembleParams) -> ScaledComplex {
    let mut rec = Recurrence::new(z, params);
    for _ in 0..k {
        rec.advance();
    }
    rec.value()
}

/// `(p_k(z), p_{k-1}(z))` sharing one log-scale: returns the scaled pair and the scale.
pub fn eval_pair(z: Complex64, k: usize, params: &EnsembleParams) -> (Complex64, Complex64, f64) {
    let mut rec = Recurrence::new(z, params);
    for _ in 0..k {
        rec.advance();
    }
    rec.scaled()
}

/// Derivatives `[p, p', p'']` of `p_k` at `z`, on a common log-scale, by the
/// trapezoid rule for the Cauchy integral (exact for polynomials).
pub fn contour_poly_derivatives(z: Complex64, k: usize, params: &EnsembleParams) -> ([Complex64; 3], f64) {
    let centre = eval_poly(z, k, params);
    let log_ref = if centre.is_zero() { 0.0 } else { centre.log_mag };
    let radius = 0.05 / (1.0 + params.big_n().sqrt() * 0.05 * z.norm().min(4.0));
    let m = 2 * k + 16;
    let f = |zeta: Complex64| eval_poly(zeta, k, params).scaled_by(log_ref);
    let d0 = f(z);
    let d1 = contour_derivative(f, z, radius, m, 1);
    let d2 = contour_derivative(f, z, radius, m, 2);
    ([d0, d1, d2], log_ref)
}

/// Relative residual of `(F0^2 / 2NT) p_k'' - 2 z p_k' + 2 k p_k = 0`,
/// normalized by the sum of the magnitudes of the three terms.
pub fn hermite_ode_residual(z: Complex64, k: usize, params: &EnsembleParams) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let geom = Geometry::new(params);
    let ([p, p1, p2], _) = contour_poly_derivatives(z, k, params);
    let c = geom.foci().powi(2) / (2.0 * params.big_n() * params.total_mass());
    let terms = [c * p2, -2.0 * z * p1, 2.0 * k as f64 * p];
    let sum: Complex64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|x| x.norm()).sum();
    if scale == 0.0 {
        return 0.0;
    }
    sum.norm() / scale
}

/// Pieces of the large-`N` expansion of `p_{n+r}(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WkbExpansion {
    pub g_val: Complex64,
    pub h_r_val: Complex64,
    pub y_minus1: Complex64,
    pub y0: Complex64,
    pub y1: Complex64,
    pub r: i64,
}

fn check_wkb_domain(z: Complex64, geom: &Geometry) -> Result<()> {
    let (dist, min) = if geom.t() > 0.0 {
        (geom.distance_to_focal_segment(z), 0.1 * geom.foci())
    } else {
        (z.norm(), 0.1 * geom.capacity())
    };
    if dist < min {
        return Err(Error::TooCloseToFocalSegment { dist, min });
    }
    Ok(())
}

/// `h_r(z)` in closed form.
pub fn h_r(z: Complex64, r: i64, geom: &Geometry) -> Result<Complex64> {
    let f2 = geom.foci().powi(2);
    let tt = geom.total_mass();
    let r = r as f64;
    let w = if geom.t() == 0.0 { z } else { geom.w(z) };
    if w == Complex64::new(0.0, 0.0) {
        return Err(Error::OnFocalSegment { re: z.re, im: z.im, f0: geom.foci() });
    }
    let s = w / z;
    let w2 = w * w;
    Ok((f2 * (1.0 + 2.0 * r) / (8.0 * w2) - (1.0 + 6.0 * r + 6.0 * r * r) / (24.0 * s) - 5.0 * f2 / (48.0 * w2 * s)) / tt)
}

/// All expansion pieces at `z`; requires distance `>= 0.1 F0` from the focal
/// segment (`>= 0.1 cap` from the origin when `t = 0`).
pub fn wkb(z: Complex64, r: i64, params: &EnsembleParams) -> Result<WkbExpansion> {
    let geom = Geometry::new(params);
    check_wkb_domain(z, &geom)?;
    let tt = geom.total_mass();
    let cap = geom.capacity();
    let ell = geom.robin();
    let f2 = geom.foci().powi(2);
    let rf = r as f64;
    let g_val = geom.g(z)?;
    let h_r_val = h_r(z, r, &geom)?;
    let w = if geom.t() == 0.0 { z } else { geom.w(z) };
    let s = w / z;
    let y_minus1 = if geom.t() == 0.0 {
        z.ln() - ell / (2.0 * tt)
    } else {
        let zs = z - w;
        zs * zs / (2.0 * f2) - (2.0 * zs / f2).ln() - ell / (2.0 * tt)
    };
    let y0 = 0.5 * (0.5 + 0.5 / s).ln() + rf * ((z + w) / 2.0).ln() - (rf + 0.5) * cap.ln();
    let y1 = (3.0 * f2 * (2.0 * s - 1.0 + 4.0 * rf * (1.0 + s + rf)) - 2.0 * z * z * (1.0 + 6.0 * rf * (rf + 1.0)))
        / (48.0 * tt * s * w * w);
    Ok(WkbExpansion { g_val, h_r_val, y_minus1, y0, y1, r })
}

/// `(N / 2 pi^3)^{1/4} psi^r sqrt(psi') exp(n g - N l / 2 + h_r / N)`, the
/// asymptotic value of `p_{n+r}(z)`.
pub fn wkb_eval_p(z: Complex64, r: i64, params: &EnsembleParams) -> Result<ScaledComplex> {
    let e = wkb(z, r, params)?;
    let geom = Geometry::new(params);
    let big_n = params.big_n();
    let n = params.n() as f64;
    let log = Complex64::new(0.25 * (big_n / (2.0 * PI.powi(3))).ln(), 0.0) + e.y0 + n * e.g_val
        - big_n * geom.robin() / 2.0
        + e.h_r_val / big_n;
    Ok(ScaledComplex::from_log(log))
}

/// `(Re(h_0 + h_{-1}), Im(h_0 - h_{-1}) / |psi'|)` at a boundary point.
pub fn h_boundary_relations(frame: &crate::geometry::BoundaryFrame, params: &EnsembleParams) -> Result<(f64, f64)> {
    let geom = Geometry::new(params);
    let h0 = h_r(frame.z0, 0, &geom)?;
    let hm1 = h_r(frame.z0, -1, &geom)?;
    Ok(((h0 + hm1).re, (h0 - hm1).im / frame.abs_dpsi))
}

/// Right-hand sides of the two boundary relations:
/// `-kappa^2/12 + kappa''/(24 kappa)` and `kappa'/(6 kappa)`.
pub fn h_boundary_targets(frame: &crate::geometry::BoundaryFrame) -> (f64, f64) {
    let k = frame.kappa;
    (-k * k / 12.0 + frame.d2kappa_ds2 / (24.0 * k), frame.dkappa_ds / (6.0 * k))
}

/// `ln |p_n(z) e^{-N(T g(z) - l/2)}|`, the quantity controlled uniformly in
/// the plane by `O(N^{5/12})`. Uses `T Re g = (V + l - Omega)/2`, which is
/// continuous across the focal segment.
pub fn log_normalized_pn(z: Complex64, params: &EnsembleParams) -> f64 {
    let geom = Geometry::new(params);
    let big_n = params.big_n();
    let p = eval_poly(z, params.n(), params);
    let t_re_g = 0.5 * (params.potential(z) + geom.robin() - geom.omega(z));
    p.log_mag - big_n * (t_re_g - geom.robin() / 2.0)
}
