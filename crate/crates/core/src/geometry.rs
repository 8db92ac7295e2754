//! Droplet geometry: the conformal maps `phi`/`psi`, the Schwarz function,
//! capacity and Robin constant, the effective potential `Omega`, boundary
//! frames with curvature data, and the curvilinear coordinates `(x, y)`
//! around a boundary point.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::EnsembleParams;
use crate::quadrature::integrate_interval;
use crate::special::ellip_e;

/// Distance to the focal segment below which the branch of `psi` is ambiguous.
pub const FOCAL_TOLERANCE: f64 = 1e-12;

/// Precomputed constants of the ellipse for one `(t, T)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    t: f64,
    total_mass: f64,
    cap: f64,
    f0: f64,
}

/// A boundary point `gamma(theta) = phi(e^{i theta})` with its local frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFrame {
    pub theta: f64,
    pub z0: Complex64,
    /// Outward unit normal.
    pub normal: Complex64,
    /// Counter-clockwise unit tangent, `i * normal`.
    pub tangent: Complex64,
    pub kappa: f64,
    pub dkappa_ds: f64,
    pub d2kappa_ds2: f64,
    pub abs_dpsi: f64,
}

/// Flat offsets `(X, Y)` from a boundary point and the matching curvilinear
/// coordinates: `x` along the normal of the foot point, `y` the arclength
/// from the frame's point to the foot point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PlanarCoords {
    pub X: f64,
    pub Y: f64,
    pub x: f64,
    pub y: f64,
}

/// `D(theta) = 1 + t^2 - 2t cos(2 theta) = |e^{i theta} - t e^{-i theta}|^2`.
fn boundary_denominator(t: f64, theta: f64) -> f64 {
    1.0 + t * t - 2.0 * t * (2.0 * theta).cos()
}

/// `delta/(1+delta) - ln(1+delta)`, accurate for small `delta`.
fn log_gap(delta: f64) -> f64 {
    if delta.abs() < 0.1 {
        let mut sum = 0.0;
        let mut power = delta * delta;
        for k in 2..40 {
            let k = k as f64;
            let sign = if k as i64 % 2 == 0 { -1.0 } else { 1.0 };
            sum += sign * (k - 1.0) / k * power;
            power *= delta;
            if power.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        delta / (1.0 + delta) - delta.ln_1p()
    }
}

impl Geometry {
    pub fn new(params: &EnsembleParams) -> Self {
        let t = params.t();
        let total_mass = params.total_mass();
        let cap = (total_mass / (1.0 - t * t)).sqrt();
        Self { t, total_mass, cap, f0: 2.0 * t.sqrt() * cap }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `cap(K) = sqrt(T / (1 - t^2))`.
    pub fn capacity(&self) -> f64 {
        self.cap
    }

    /// `F0 = sqrt(4 t T / (1 - t^2))`.
    pub fn foci(&self) -> f64 {
        self.f0
    }

    /// `l = T (2 ln cap - 1)`.
    pub fn robin(&self) -> f64 {
        self.total_mass * (2.0 * self.cap.ln() - 1.0)
    }

    /// `phi(u) = cap (u + t/u)`.
    pub fn phi(&self, u: Complex64) -> Result<Complex64> {
        if self.t > 0.0 && u.norm() <= self.t.sqrt() {
            return Err(Error::Domain(format!("phi requires |u| > sqrt(t), got |u| = {}", u.norm())));
        }
        Ok(self.phi_unchecked(u))
    }

    fn phi_unchecked(&self, u: Complex64) -> Complex64 {
        if self.t == 0.0 {
            return self.cap * u;
        }
        self.cap * (u + self.t / u)
    }

    /// `phi', phi'', phi'''` at `u`.
    pub fn phi_derivatives(&self, u: Complex64) -> [Complex64; 3] {
        let c = self.cap;
        let t = self.t;
        [c * (1.0 - t / (u * u)), 2.0 * c * t / (u * u * u), -6.0 * c * t / (u * u * u * u)]
    }

    pub fn distance_to_focal_segment(&self, z: Complex64) -> f64 {
        let x = z.re.clamp(-self.f0, self.f0);
        Complex64::new(z.re - x, z.im).norm()
    }

    fn check_off_segment(&self, z: Complex64) -> Result<()> {
        if self.t > 0.0 && self.distance_to_focal_segment(z) <= FOCAL_TOLERANCE {
            return Err(Error::OnFocalSegment { re: z.re, im: z.im, f0: self.f0 });
        }
        Ok(())
    }

    /// `w(z) = sqrt(z - F0) sqrt(z + F0)` with principal roots: analytic off
    /// the focal segment and `~ z` at infinity, i.e. `z sqrt(1 - F0^2/z^2)`.
    pub fn w(&self, z: Complex64) -> Complex64 {
        (z - self.f0).sqrt() * (z + self.f0).sqrt()
    }

    /// `psi(z) = (z + w(z)) / (2 cap)`, the inverse of `phi`.
    pub fn psi(&self, z: Complex64) -> Result<Complex64> {
        self.check_off_segment(z)?;
        if self.t == 0.0 {
            return Ok(z / self.cap);
        }
        Ok((z + self.w(z)) / (2.0 * self.cap))
    }

    /// `[psi, psi', psi'', psi''']` at `z`.
    pub fn psi_derivatives(&self, z: Complex64) -> Result<[Complex64; 4]> {
        let u = self.psi(z)?;
        let [d1, d2, d3] = self.phi_derivatives(u);
        let p1 = 1.0 / d1;
        let p2 = -d2 * p1 * p1 * p1;
        let p3 = -d3 * p1.powi(4) + 3.0 * d2 * d2 * p1.powi(5);
        Ok([u, p1, p2, p3])
    }

    /// Schwarz function `S(z) = t z + 2T / (z + w(z))`.
    pub fn schwarz(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.schwarz_derivatives(z)?[0])
    }

    /// `[S, S', S'', S''']` at `z`.
    pub fn schwarz_derivatives(&self, z: Complex64) -> Result<[Complex64; 4]> {
        self.check_off_segment(z)?;
        let tt = self.total_mass;
        let w = self.w(z);
        let s = self.t * z + 2.0 * tt / (z + w);
        let s1 = self.t - 2.0 * tt / (w * (z + w));
        let s2 = 2.0 * tt / (w * w * w);
        let s3 = -6.0 * tt * z / w.powi(5);
        Ok([s, s1, s2, s3])
    }

    /// `g(z) = ln((z + w)/2) + z/(z + w) - 1/2`, the complex logarithmic
    /// potential of the uniform measure on `K` (up to the factor `T`).
    pub fn g(&self, z: Complex64) -> Result<Complex64> {
        self.check_off_segment(z)?;
        if self.t == 0.0 {
            return Ok(z.ln());
        }
        let zw = z + self.w(z);
        Ok((zw / 2.0).ln() + z / zw - 0.5)
    }

    /// `Omega(phi(R e^{i theta}))` in closed form.
    pub fn omega_polar(&self, r: f64, theta: f64) -> f64 {
        let t = self.t;
        let tt = self.total_mass;
        let delta = (r - 1.0) * (r + 1.0);
        let r2 = r * r;
        let tc = t * (2.0 * theta).cos();
        tt * (delta * delta * (1.0 - tc) / ((1.0 - t * t) * r2) + log_gap(delta))
    }

    /// Effective potential `Omega = V - 2T Re g + l`: zero on the boundary,
    /// positive elsewhere. Continuous across the focal segment.
    pub fn omega(&self, z: Complex64) -> f64 {
        if self.t == 0.0 {
            if z == Complex64::new(0.0, 0.0) {
                return f64::INFINITY;
            }
            return self.omega_polar(z.norm() / self.cap, 0.0);
        }
        if self.distance_to_focal_segment(z) <= FOCAL_TOLERANCE {
            let c = (z.re / self.f0).clamp(-1.0, 1.0).acos();
            let r = self.t.sqrt();
            return 0.5 * (self.omega_polar(r, c) + self.omega_polar(r, -c));
        }
        let u = (z + self.w(z)) / (2.0 * self.cap);
        self.omega_polar(u.norm(), u.arg())
    }

    /// Ellipse inequality `(1-t)/(1+t) x^2 + (1+t)/(1-t) y^2 <= T`.
    pub fn is_inside(&self, z: Complex64) -> bool {
        let t = self.t;
        (1.0 - t) / (1.0 + t) * z.re * z.re + (1.0 + t) / (1.0 - t) * z.im * z.im <= self.total_mass
    }

    /// `gamma(theta) = phi(e^{i theta})`.
    pub fn boundary_point(&self, theta: f64) -> Complex64 {
        self.cap * (Complex64::from_polar(1.0, theta) + self.t * Complex64::from_polar(1.0, -theta))
    }

    /// `|phi'(e^{i theta})| = ds/dtheta`.
    pub fn speed(&self, theta: f64) -> f64 {
        self.cap * boundary_denominator(self.t, theta).sqrt()
    }

    pub fn boundary_frame(&self, theta: f64) -> BoundaryFrame {
        let theta = theta.rem_euclid(TAU);
        let t = self.t;
        let tt = self.total_mass;
        let d = boundary_denominator(t, theta);
        let one_m = 1.0 - t * t;
        let e = Complex64::from_polar(1.0, theta);
        let normal = (e - t * e.conj()) / d.sqrt();
        let c2 = (2.0 * theta).cos();
        let c4 = (4.0 * theta).cos();
        let kappa = one_m.powf(1.5) / (tt.sqrt() * d.powf(1.5));
        let mut dkappa_ds = -6.0 * one_m * one_m * t * (2.0 * theta).sin() / (tt * d.powi(3));
        if cfg!(feature = "mutation-kappa1") {
            dkappa_ds = -dkappa_ds;
        }
        let d2kappa_ds2 =
            -12.0 * one_m.powf(2.5) * t * (2.0 * t * (c4 - 2.0) + (1.0 + t * t) * c2) / (tt.powf(1.5) * d.powf(4.5));
        let abs_dpsi = (one_m / tt).sqrt() / d.sqrt();
        BoundaryFrame {
            theta,
            z0: self.boundary_point(theta),
            normal,
            tangent: Complex64::i() * normal,
            kappa,
            dkappa_ds,
            d2kappa_ds2,
            abs_dpsi,
        }
    }

    /// Perimeter `L = 4 cap (1 + t) E(k)`, `k = 2 sqrt(t) / (1 + t)`.
    pub fn perimeter(&self) -> f64 {
        let t = self.t;
        let k = 2.0 * t.sqrt() / (1.0 + t);
        4.0 * self.cap * (1.0 + t) * ellip_e(k).expect("modulus below one")
    }

    /// Signed arclength from `gamma(theta0)` to `gamma(theta1)` along the
    /// counter-clockwise direction, integrating over `theta1 - theta0` as given.
    pub fn arclength_between(&self, theta0: f64, theta1: f64) -> f64 {
        if theta0 == theta1 {
            return 0.0;
        }
        if self.t == 0.0 {
            return self.cap * (theta1 - theta0);
        }
        let panels = (((theta1 - theta0).abs() / (PI / 8.0)).ceil() as usize).max(1);
        integrate_interval(|th| self.speed(th), theta0, theta1, 24, panels)
    }

    /// Arclength `s(theta)` measured from `theta = 0`, for `theta` in `[0, 2 pi)`.
    pub fn arclength(&self, theta: f64) -> f64 {
        self.arclength_between(0.0, theta.rem_euclid(TAU))
    }

    /// Inverse of [`Geometry::arclength`]: `theta` in `[0, 2 pi)` with `s(theta) = s`.
    pub fn theta_at_arclength(&self, s: f64) -> f64 {
        let l = self.perimeter();
        let s = s.rem_euclid(l);
        let mut theta = TAU * s / l;
        for _ in 0..50 {
            let step = (self.arclength(theta) - s) / self.speed(theta);
            theta = (theta - step).clamp(0.0, TAU);
            if step.abs() < 1e-15 {
                break;
            }
        }
        theta
    }

    /// Foot point of the normal through `z`: returns `theta` of the closest
    /// boundary point and the signed distance along its outward normal.
    pub fn nearest_boundary(&self, z: Complex64) -> (f64, f64) {
        let mut theta = if self.t == 0.0 || self.distance_to_focal_segment(z) <= FOCAL_TOLERANCE {
            if z.norm() == 0.0 { 0.0 } else { z.arg() }
        } else {
            ((z + self.w(z)) / (2.0 * self.cap)).arg()
        };
        if self.t > 0.0 {
            let dist2 = |th: f64| (z - self.boundary_point(th)).norm_sqr();
            let stationarity = |th: f64| {
                let e = Complex64::from_polar(1.0, th);
                let g1 = Complex64::i() * self.cap * (e - self.t * e.conj());
                ((self.boundary_point(th) - z) * g1.conj()).re
            };
            for _ in 0..100 {
                let e = Complex64::from_polar(1.0, theta);
                let g = self.boundary_point(theta);
                let g1 = Complex64::i() * self.cap * (e - self.t * e.conj());
                let g2 = -g;
                let f = ((g - z) * g1.conj()).re;
                let df = g1.norm_sqr() + ((g - z) * g2.conj()).re;
                let mut step = if df > 0.0 { -f / df } else { -f.signum() * 0.1 };
                let current = dist2(theta);
                let tiny = 1e-12 * current.max(f64::MIN_POSITIVE);
                while step.abs() > 1e-16 {
                    let next = dist2(theta + step);
                    if next < current - tiny || (next <= current + tiny && stationarity(theta + step).abs() < f.abs()) {
                        break;
                    }
                    step *= 0.5;
                }
                theta += step;
                if step.abs() < 1e-14 {
                    break;
                }
            }
        }
        let frame_normal = {
            let e = Complex64::from_polar(1.0, theta);
            (e - self.t * e.conj()) / boundary_denominator(self.t, theta).sqrt()
        };
        let offset = ((z - self.boundary_point(theta)) * frame_normal.conj()).re;
        (theta.rem_euclid(TAU), offset)
    }

    /// Exact curvilinear coordinates of `z0 + X n + Y t` by solving the
    /// geometric equations (nearest point plus arclength quadrature).
    #[allow(non_snake_case)]
    pub fn exact_coordinates(&self, X: f64, Y: f64, frame: &BoundaryFrame) -> PlanarCoords {
        let z = frame.z0 + X * frame.normal + Y * frame.tangent;
        let (theta, x) = self.nearest_boundary(z);
        let mut dtheta = (theta - frame.theta).rem_euclid(TAU);
        if dtheta > PI {
            dtheta -= TAU;
        }
        let y = self.arclength_between(frame.theta, frame.theta + dtheta);
        PlanarCoords { X, Y, x, y }
    }
}

/// Default locality radius of [`coordinate_change`]: `0.2 / kappa`.
pub fn default_locality_radius(frame: &BoundaryFrame) -> f64 {
    0.2 / frame.kappa
}

/// Degree-4 series for the curvilinear coordinates `(x, y)` of the point
/// `z0 + X n + Y t`, with `|X| + |Y|` limited to `locality` (default `0.2/kappa`).
#[allow(non_snake_case)]
pub fn coordinate_change(X: f64, Y: f64, frame: &BoundaryFrame, locality: Option<f64>) -> Result<PlanarCoords> {
    let limit = locality.unwrap_or_else(|| default_locality_radius(frame));
    let radius = X.abs() + Y.abs();
    if !(radius <= limit) {
        return Err(Error::OutsideLocality { radius, limit });
    }
    let k = frame.kappa;
    let k1 = frame.dkappa_ds;
    let k2 = frame.d2kappa_ds2;
    let x = X + k / 2.0 * Y * Y + k1 / 6.0 * Y.powi(3) - k * k / 2.0 * X * Y * Y + k.powi(3) / 2.0 * X * X * Y * Y
        - k * k1 / 2.0 * X * Y.powi(3)
        + (k2 / 24.0 - k.powi(3) / 8.0) * Y.powi(4);
    let y = Y - k * X * Y + k * k * X * X * Y - k1 / 2.0 * X * Y * Y - k * k / 3.0 * Y.powi(3) - k.powi(3) * X.powi(3) * Y
        + 1.5 * k * k1 * X * X * Y * Y
        - 7.0 * k * k1 / 24.0 * Y.powi(4)
        + (k.powi(3) - k2 / 6.0) * X * Y.powi(3);
    Ok(PlanarCoords { X, Y, x, y })
}

/// Jacobian `1 + kappa x` of `(x, s) -> gamma(s) + x n(s)`.
pub fn jacobian(x: f64, frame: &BoundaryFrame) -> f64 {
    1.0 + frame.kappa * x
}

pub fn foci(params: &EnsembleParams) -> f64 {
    Geometry::new(params).foci()
}

pub fn capacity(params: &EnsembleParams) -> f64 {
    Geometry::new(params).capacity()
}

pub fn robin(params: &EnsembleParams) -> f64 {
    Geometry::new(params).robin()
}

pub fn phi(u: Complex64, params: &EnsembleParams) -> Result<Complex64> {
    Geometry::new(params).phi(u)
}

pub fn psi(z: Complex64, params: &EnsembleParams) -> Result<Complex64> {
    Geometry::new(params).psi(z)
}

pub fn schwarz(z: Complex64, params: &EnsembleParams) -> Result<Complex64> {
    Geometry::new(params).schwarz(z)
}

pub fn omega(z: Complex64, params: &EnsembleParams) -> f64 {
    Geometry::new(params).omega(z)
}

pub fn boundary_frame(theta: f64, params: &EnsembleParams) -> BoundaryFrame {
    Geometry::new(params).boundary_frame(theta)
}

/// Complete elliptic modulus `k = 2 sqrt(t) / (1 + t)` of the perimeter.
pub fn perimeter_modulus(t: f64) -> f64 {
    2.0 * t.sqrt() / (1.0 + t)
}
