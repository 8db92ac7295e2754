//! Boundary asymptotics: the edge density profile with curvature
//! corrections, Taylor expansions of `Omega`, normal and tangential density
//! derivatives, and the outside-count asymptotics.

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{coordinate_change, perimeter_modulus, BoundaryFrame, Geometry};
use crate::params::EnsembleParams;
use crate::special::{ellip_e, ellip_k, erfc};

fn inv_sqrt_2pi3() -> f64 {
    1.0 / (2.0 * PI.powi(3)).sqrt()
}

/// `(kappa')^2 / (9 kappa^2) - kappa'' / (12 kappa)`, the curvature-derivative
/// coefficient that recurs in the `1/N` corrections.
fn derivative_coefficient(frame: &BoundaryFrame) -> f64 {
    let k = frame.kappa;
    frame.dkappa_ds.powi(2) / (9.0 * k * k) - frame.d2kappa_ds2 / (12.0 * k)
}

/// The coefficient profiles of the edge expansion at one boundary point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeExpansion {
    pub frame: BoundaryFrame,
    pub params: EnsembleParams,
}

impl EdgeExpansion {
    pub fn new(theta: f64, params: &EnsembleParams) -> Self {
        Self { frame: Geometry::new(params).boundary_frame(theta), params: *params }
    }

    /// `erfc(sqrt 2 xi) / (2 pi)`.
    pub fn rho0(&self, xi: f64) -> f64 {
        rho0(xi)
    }

    /// `kappa (xi^2 - 1) e^{-2 xi^2} / (3 sqrt(2 pi^3))`, the `N^{-1/2}` coefficient.
    pub fn rho1(&self, xi: f64) -> f64 {
        self.frame.kappa * (xi * xi - 1.0) * (-2.0 * xi * xi).exp() * inv_sqrt_2pi3() / 3.0
    }

    /// The `1/N` coefficient on the normal line.
    pub fn rho2(&self, xi: f64) -> f64 {
        (-2.0 * xi * xi).exp() * inv_sqrt_2pi3() * self.psi(xi, 0.0)
    }

    /// `Psi(xi, eta)`.
    pub fn psi(&self, xi: f64, eta: f64) -> f64 {
        let k = self.frame.kappa;
        let dk = self.frame.dkappa_ds;
        let (x2, e2) = (xi * xi, eta * eta);
        let poly = 2.0 * xi.powi(5) - 8.0 * xi.powi(3) + 3.0 * xi + 36.0 * xi * e2 - 12.0 * xi.powi(3) * e2
            + 18.0 * xi * e2 * e2;
        k * k * poly / 18.0 + derivative_coefficient(&self.frame) * xi + dk / 3.0 * (x2 * eta - e2 * eta - eta)
    }

    /// Edge density at normal coordinate `xi` and tangential coordinate `eta`
    /// (both in units of `N^{-1/2}`).
    pub fn density(&self, xi: f64, eta: f64) -> f64 {
        let big_n = self.params.big_n();
        let k = self.frame.kappa;
        let bracket = k / big_n.sqrt() * ((xi * xi - 1.0) / 3.0 - eta * eta) + self.psi(xi, eta) / big_n;
        rho0(xi) + (-2.0 * xi * xi).exp() * inv_sqrt_2pi3() * bracket
    }

    /// Expansion of the density on the normal line through order `order` (0, 1 or 2).
    pub fn density_to_order(&self, xi: f64, order: u8) -> f64 {
        let big_n = self.params.big_n();
        let mut v = self.rho0(xi);
        if order >= 1 {
            v += self.rho1(xi) / big_n.sqrt();
        }
        if order >= 2 {
            v += self.rho2(xi) / big_n;
        }
        v
    }
}

/// `erfc(sqrt 2 xi) / (2 pi)`.
pub fn rho0(xi: f64) -> f64 {
    erfc(SQRT_2 * xi) / TAU
}

/// The edge density at `z0 + (xi n + eta t) / sqrt N`.
pub fn edge_density(xi: f64, eta: f64, frame: &BoundaryFrame, params: &EnsembleParams) -> f64 {
    EdgeExpansion { frame: *frame, params: *params }.density(xi, eta)
}

/// Degree-4 Taylor polynomial of `Omega(z0 + X n + Y t)`.
pub fn omega_edge_expansion(x: f64, y: f64, frame: &BoundaryFrame) -> f64 {
    let k = frame.kappa;
    let dk = frame.dkappa_ds;
    2.0 * x * x - 2.0 * k / 3.0 * (x.powi(3) - 3.0 * x * y * y)
        + k * k / 2.0 * (x.powi(4) - 6.0 * x * x * y * y + y.powi(4))
        - 2.0 * dk / 3.0 * (x.powi(3) * y - x * y.powi(3))
}

/// Expansion of `e^{-N Omega}` in the boundary window.
pub fn exp_omega_expansion(x: f64, y: f64, frame: &BoundaryFrame, big_n: f64) -> f64 {
    let k = frame.kappa;
    let dk = frame.dkappa_ds;
    let cubic = x.powi(3) - 3.0 * x * y * y;
    let quartic = x.powi(4) - 6.0 * x * x * y * y + y.powi(4);
    let mixed = x.powi(3) * y - x * y.powi(3);
    (-2.0 * big_n * x * x).exp()
        * (1.0 + 2.0 * k * big_n / 3.0 * cubic - k * k * big_n / 2.0 * quartic + 2.0 * dk * big_n / 3.0 * mixed
            + 2.0 * k * k * big_n * big_n / 9.0 * cubic * cubic)
}

/// Normal derivative of the density at `z0 + X n`.
pub fn dn_rho_expansion(x: f64, frame: &BoundaryFrame, params: &EnsembleParams) -> f64 {
    let big_n = params.big_n();
    let k = frame.kappa;
    let dk = frame.dkappa_ds;
    let d2k = frame.d2kappa_ds2;
    let bracket = -2.0
        - k * (4.0 / 3.0 * big_n * x.powi(3) - 2.0 * x)
        - k * k * (4.0 / 9.0 * big_n * big_n * x.powi(6) - 7.0 / 3.0 * big_n * x.powi(4) + 2.0 * x * x)
        + (d2k / (3.0 * k) - 4.0 * dk * dk / (9.0 * k * k)) * x * x
        + (k * k / 6.0 + dk * dk / (9.0 * k * k) - d2k / (12.0 * k)) / big_n;
    (big_n / (2.0 * PI.powi(3))).sqrt() * (-2.0 * big_n * x * x).exp() * bracket
}

/// Tangential derivative of the density at `z0 + X n + Y t`. The `1/N`
/// term is `2 kappa Im(h_{-1} - h_0) / (|psi'| N) = -kappa' / (3N)`.
pub fn dt_rho_expansion(x: f64, y: f64, frame: &BoundaryFrame, params: &EnsembleParams) -> f64 {
    let big_n = params.big_n();
    let k = frame.kappa;
    let dk = frame.dkappa_ds;
    let bracket = -2.0 * k * y
        + k * k * (4.0 * big_n * x * y.powi(3) - 4.0 / 3.0 * big_n * x.powi(3) * y + 4.0 * x * y)
        + dk * (x * x / 3.0 - y * y)
        - dk / (3.0 * big_n);
    (big_n / (2.0 * PI.powi(3))).sqrt() * (-2.0 * big_n * x * x).exp() * bracket
}

/// Large-`n` expected number of particles outside the droplet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutsideCount {
    pub leading: f64,
    pub correction: f64,
    pub k_modulus: f64,
    pub perimeter: f64,
}

impl OutsideCount {
    pub fn total(&self) -> f64 {
        self.leading + self.correction
    }
}

/// `sqrt(n)/(2 pi)^{3/2} [4 sqrt((1+t)/(1-t)) E(k) - ((1+t^2) E(k) + 2 (1-t)^2 K(k)) / (9 n (1-t)^{3/2} (1+t)^{1/2})]`
/// with `k = 2 sqrt(t) / (1 + t)`.
pub fn n_out_asymptotic(params: &EnsembleParams) -> Result<OutsideCount> {
    let t = params.t();
    let n = params.n() as f64;
    let k = perimeter_modulus(t);
    let e = ellip_e(k)?;
    let kk = ellip_k(k)?;
    let prefactor = n.sqrt() / TAU.powf(1.5);
    let leading = prefactor * 4.0 * ((1.0 + t) / (1.0 - t)).sqrt() * e;
    let correction = -prefactor / n * ((1.0 + t * t) * e + 2.0 * (1.0 - t).powi(2) * kk)
        / (9.0 * (1.0 - t).powf(1.5) * (1.0 + t).sqrt());
    let geom = Geometry::new(params);
    Ok(OutsideCount { leading, correction, k_modulus: k, perimeter: geom.perimeter() })
}

/// Expected number of outside particles per unit boundary length, as a
/// function of the boundary angle.
pub fn arclength_escape_density(theta: f64, params: &EnsembleParams) -> f64 {
    let frame = Geometry::new(params).boundary_frame(theta);
    escape_density_at(&frame, params)
}

fn escape_density_at(frame: &BoundaryFrame, params: &EnsembleParams) -> f64 {
    let big_n = params.big_n();
    let k = frame.kappa;
    let c = k * k / 12.0 - frame.dkappa_ds.powi(2) / (18.0 * k * k) + frame.d2kappa_ds2 / (24.0 * k);
    big_n.sqrt() / TAU.powf(1.5) * (1.0 - c / big_n)
}

/// The density at `z0 + (eta / sqrt N) t` computed two ways.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentialConsistency {
    /// The tangential-coordinate expansion evaluated at `(0, eta)`.
    pub tangential: f64,
    /// The normal-line expansion at the boundary point reached by the
    /// curvilinear coordinates of the same point.
    pub normal_route: f64,
}

impl TangentialConsistency {
    pub fn gap(&self) -> f64 {
        (self.tangential - self.normal_route).abs()
    }
}

pub fn tangential_consistency(eta: f64, frame: &BoundaryFrame, params: &EnsembleParams) -> Result<TangentialConsistency> {
    let big_n = params.big_n();
    let geom = Geometry::new(params);
    let y_flat = eta / big_n.sqrt();
    let curvilinear = coordinate_change(0.0, y_flat, frame, None)?;
    let theta_hat = geom.theta_at_arclength(geom.arclength(frame.theta) + curvilinear.y);
    let moved = geom.boundary_frame(theta_hat);
    let normal_route = EdgeExpansion { frame: moved, params: *params }.density_to_order(big_n.sqrt() * curvilinear.x, 2);
    Ok(TangentialConsistency { tangential: edge_density(0.0, eta, frame, params), normal_route })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t: f64, tt: f64, n: usize) -> EnsembleParams {
        EnsembleParams::new(t, tt, n).unwrap()
    }

    #[test]
    fn profile_symmetries() {
        let e = EdgeExpansion::new(0.7, &params(0.5, 1.0, 100));
        for i in 0..=40 {
            let xi = -4.0 + 0.2 * i as f64;
            assert!((e.rho0(xi) + e.rho0(-xi) - 1.0 / PI).abs() < 1e-15);
            assert!((e.rho1(xi) - e.rho1(-xi)).abs() < 1e-15);
            assert!((e.rho2(xi) + e.rho2(-xi)).abs() < 1e-14);
        }
    }

    #[test]
    fn edge_density_limits() {
        let p = params(0.5, 1.0, 100);
        let f = Geometry::new(&p).boundary_frame(0.0);
        assert!((rho0(0.0) - 1.0 / TAU).abs() < 1e-16);
        assert!((edge_density(-4.0, 0.0, &f, &p) - 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn omega_expansions_at_origin() {
        let f = Geometry::new(&params(0.5, 1.0, 10)).boundary_frame(1.0);
        assert_eq!(omega_edge_expansion(0.0, 0.0, &f), 0.0);
        assert_eq!(exp_omega_expansion(0.0, 0.0, &f, 10.0), 1.0);
    }

    #[test]
    fn table_asymptotic_column() {
        let rows = [
            (0.5, 1.0, 2, 0.66226),
            (0.5, 1.0, 4, 0.95822),
            (0.5, 1.0, 8, 1.37043),
            (0.5, 1.0, 16, 1.94890),
            (0.5, 1.0, 32, 2.76382),
            (0.5, 1.0, 64, 3.91404),
            (0.75, 0.4375, 4, 1.33977),
            (0.75, 0.4375, 10, 2.15936),
            (0.75, 0.4375, 32, 3.89639),
            (0.75, 0.4375, 64, 5.52114),
        ];
        for (t, tt, n, want) in rows {
            let got = n_out_asymptotic(&params(t, tt, n)).unwrap().total();
            assert!((got - want).abs() < 5e-6, "t={t}, n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn leading_term_is_perimeter_form() {
        for (t, tt) in [(0.0, 1.0), (0.3, 2.0), (0.75, 0.4375)] {
            let p = params(t, tt, 50);
            let c = n_out_asymptotic(&p).unwrap();
            let want = (50f64).sqrt() * c.perimeter / (TAU.powf(1.5) * tt.sqrt());
            assert!((c.leading - want).abs() < 1e-10 * want);
            assert!(c.correction < 0.0);
        }
    }

    #[test]
    fn circle_escape_density_is_constant() {
        let p = params(0.0, 1.0, 30);
        let a = arclength_escape_density(0.0, &p);
        for i in 1..10 {
            assert!((arclength_escape_density(i as f64 * 0.6, &p) - a).abs() < 1e-15);
        }
    }

    #[test]
    fn circle_tangential_pattern() {
        let p = params(0.0, 1.0, 400);
        let f = Geometry::new(&p).boundary_frame(0.3);
        for eta in [0.0, 0.5, 1.5] {
            let d = edge_density(0.0, eta, &f, &p);
            let psi = EdgeExpansion { frame: f, params: p }.psi(0.0, eta);
            let kappa_term = (d - rho0(0.0) - inv_sqrt_2pi3() * psi / 400.0) * inv_sqrt_2pi3().recip();
            assert!((kappa_term + (1.0 + 3.0 * eta * eta) / (3.0 * 20.0)).abs() < 1e-14);
        }
    }
}
