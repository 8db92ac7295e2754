//! The validation suite: each check compares a computed quantity with an
//! independent oracle or a published value and records the measured gap
//! against its bound.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::edge::{dn_rho_expansion, dt_rho_expansion, n_out_asymptotic, omega_edge_expansion, tangential_consistency, EdgeExpansion};
use crate::error::Result;
use crate::geometry::{BoundaryFrame, Geometry};
use crate::kernel::{cauchy_transform, cd_identity_rhs, density, density_gradient_cd, directional_derivative, expected_outside_exact, prekernel_dz};
use crate::orthopoly::{eval_poly, h_boundary_relations, h_boundary_targets, wkb_eval_p, Recurrence};
use crate::params::EnsembleParams;
use crate::quadrature::{integrate_refined, GridSpec, Region};
use crate::sampler::{histogram_chi2, run, SamplerConfig};

/// One measured quantity against its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
    pub detail: String,
    /// Set for checks of the form `value >= bound`.
    #[serde(skip)]
    lower: bool,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), value, bound, pass: value <= bound, detail: detail.into(), lower: false }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), value, bound, pass: value >= bound, detail: detail.into(), lower: true }
    }

    fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), value: f64::NAN, bound: f64::NAN, pass: false, detail: detail.into(), lower: false }
    }
}

/// `value / bound` for upper bounds, `bound / value` for lower bounds; a
/// check passes when this is at most one.
fn load(c: &Check) -> f64 {
    let r = if c.lower { c.bound / c.value } else { c.value / c.bound };
    if r.is_nan() { f64::INFINITY } else { r }
}

/// Combines sub-checks into one: passes iff all pass, and reports the
/// sub-check closest to (or furthest past) its bound.
fn all_of(name: &str, parts: Vec<Check>) -> Check {
    let pass = parts.iter().all(|c| c.pass);
    let failures: Vec<String> = parts.iter().filter(|c| !c.pass).map(|c| format!("{} = {:.3e} vs {:.3e} ({})", c.name, c.value, c.bound, c.detail)).collect();
    let worst = parts.iter().filter(|c| c.pass == pass).max_by(|a, b| load(a).total_cmp(&load(b))).cloned();
    match worst {
        Some(w) => {
            let detail = if pass { format!("tightest: {} ({} sub-checks)", w.name, parts.len()) } else { failures.join("; ") };
            Check { name: name.into(), value: w.value, bound: w.bound, pass, detail, lower: w.lower }
        }
        None => Check::failed(name, "no sub-checks"),
    }
}

fn or_failed(name: &str, r: Result<Check>) -> Check {
    r.unwrap_or_else(|e| Check::failed(name, e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub level: Level,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

fn params(t: f64, tt: f64, n: usize) -> EnsembleParams {
    EnsembleParams::new(t, tt, n).expect("valid literal parameters")
}

/// Expected outside counts of the published table: `(t, T, n, exact, asymptotic)`.
pub const OUTSIDE_TABLE: [(f64, f64, usize, f64, f64); 10] = [
    (0.5, 1.0, 2, 0.66073, 0.66226),
    (0.5, 1.0, 4, 0.95741, 0.95822),
    (0.5, 1.0, 8, 1.36998, 1.37043),
    (0.5, 1.0, 16, 1.94876, 1.94890),
    (0.5, 1.0, 32, 2.76381, 2.76382),
    (0.5, 1.0, 64, 3.9141, 3.91404),
    (0.75, 0.4375, 4, 1.3261, 1.33977),
    (0.75, 0.4375, 10, 2.1535, 2.15936),
    (0.75, 0.4375, 32, 3.8944, 3.89639),
    (0.75, 0.4375, 64, 5.5201, 5.52114),
];

/// Exact outside counts against the table, with the interior cross-check.
pub fn table_exact() -> Check {
    let mut parts = Vec::new();
    for (t, tt, n, want, _) in OUTSIDE_TABLE {
        let name = format!("t={t},T={tt},n={n}");
        match expected_outside_exact(&params(t, tt, n)) {
            Ok(r) => {
                parts.push(Check::at_most(name.clone(), (r.n_out - want).abs(), 5e-4, format!("n_out = {:.6}", r.n_out)));
                parts.push(Check::at_most(format!("{name} interior"), (r.n_out - r.interior_estimate).abs(), 1e-4, ""));
            }
            Err(e) => parts.push(Check::failed(name, e.to_string())),
        }
    }
    all_of("table exact outside counts", parts)
}

/// Asymptotic outside counts against the table's printed five decimals.
pub fn table_asymptotic() -> Check {
    let parts = OUTSIDE_TABLE
        .iter()
        .map(|&(t, tt, n, _, want)| {
            let name = format!("t={t},T={tt},n={n}");
            match n_out_asymptotic(&params(t, tt, n)) {
                Ok(c) => Check::at_most(name, (c.total() - want).abs(), 5e-6, format!("{:.6}", c.total())),
                Err(e) => Check::failed(name, e.to_string()),
            }
        })
        .collect();
    all_of("table asymptotic outside counts", parts)
}

/// `sup_{|xi| <= 3} |rho_n(z0 + xi n / sqrt N) - expansion through 1/N|`.
pub fn edge_sup_error(theta: f64, p: &EnsembleParams) -> f64 {
    let e = EdgeExpansion::new(theta, p);
    let root = p.big_n().sqrt();
    (0..=120)
        .map(|i| {
            let xi = -3.0 + 0.05 * i as f64;
            let z = e.frame.z0 + e.frame.normal * (xi / root);
            (density(z, p) - e.density_to_order(xi, 2)).abs()
        })
        .fold(0.0, f64::max)
}

/// Edge profile error against `bound_constant * N^{-5/4}` (when given) and
/// its decay by at least `2^{1.2}` under doubling of `N`.
pub fn edge_profile(t: f64, thetas: &[f64], ns: &[usize], bound_constant: Option<f64>) -> Check {
    let mut parts = Vec::new();
    for &theta in thetas {
        let mut previous: Option<f64> = None;
        for &n in ns {
            let p = params(t, 1.0, n);
            let sup = edge_sup_error(theta, &p);
            if let Some(c) = bound_constant {
                parts.push(Check::at_most(format!("t={t},theta={theta:.4},n={n}"), sup, c * p.big_n().powf(-1.25), ""));
            }
            if let Some(prev) = previous {
                parts.push(Check::at_least(format!("t={t},theta={theta:.4},n={n} ratio"), prev / sup, 2f64.powf(1.2), ""));
            }
            previous = Some(sup);
        }
    }
    all_of(&format!("edge profile t={t}"), parts)
}

/// Boundary value `rho_n(z0) = 1/(2 pi) - kappa / (3 sqrt(2 pi^3 N))` at eight points.
pub fn boundary_value() -> Check {
    let p = params(0.5, 1.0, 1024);
    let geom = Geometry::new(&p);
    let big_n = p.big_n();
    let parts = (0..8)
        .map(|k| {
            let f = geom.boundary_frame(k as f64 * TAU / 8.0 + 0.1);
            let want = 1.0 / TAU - f.kappa / (3.0 * (2.0 * PI.powi(3) * big_n).sqrt());
            Check::at_most(format!("theta={:.4}", f.theta), (density(f.z0, &p) - want).abs(), 3.0 * big_n.powf(-1.25), "")
        })
        .collect();
    all_of("boundary density value", parts)
}

/// Christoffel–Darboux identity at 100 random pairs and the gradient
/// against central finite differences.
pub fn christoffel_darboux() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee);
    let mut parts = Vec::new();
    let mut worst_cd: f64 = 0.0;
    for i in 0..100 {
        let n = [8, 16, 32, 64][i % 4];
        let t = [0.0, 0.25, 0.5, 0.75][(i / 4) % 4];
        let p = params(t, 1.0, n);
        let geom = Geometry::new(&p);
        let mut point = || {
            let r = 0.85 + 0.45 * rng.random::<f64>();
            let a = TAU * rng.random::<f64>();
            geom.phi(Complex64::from_polar(r, a)).expect("radius above sqrt(t)")
        };
        let (z, w) = (point(), point());
        let lhs = prekernel_dz(z, w, &p).to_complex();
        let rhs = cd_identity_rhs(z, w, &p).to_complex();
        worst_cd = worst_cd.max((lhs - rhs).norm() / rhs.norm());
    }
    parts.push(Check::at_most("CD identity, worst relative error", worst_cd, 1e-8, "100 pairs"));
    let mut worst_fd: f64 = 0.0;
    for (t, n, z) in [
        (0.5, 32, Complex64::new(0.5, 0.0)),
        (0.5, 32, Complex64::new(1.6, 0.1)),
        (0.25, 16, Complex64::new(0.3, 1.0)),
        (0.75, 24, Complex64::new(-0.9, 0.4)),
        (0.0, 40, Complex64::new(0.7, -0.7)),
    ] {
        let p = params(t, 1.0, n);
        let h = 1e-5;
        let dx = (density(z + h, &p) - density(z - h, &p)) / (2.0 * h);
        let dy = (density(z + Complex64::new(0.0, h), &p) - density(z - Complex64::new(0.0, h), &p)) / (2.0 * h);
        let fd = Complex64::new(0.5 * dx, -0.5 * dy);
        let cd = density_gradient_cd(z, &p);
        worst_fd = worst_fd.max((fd - cd).norm() / cd.norm().max(1e-3));
    }
    parts.push(Check::at_most("gradient vs finite differences", worst_fd, 1e-6, "relative, floor 1e-3"));
    all_of("Christoffel-Darboux identity", parts)
}

/// Least-squares slope and coefficient of determination of `ys` against `xs`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    (slope, 1.0 - ss_res / syy)
}

fn log_linear_decay(name: &str, ns: &[f64], values: &[f64]) -> Check {
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let decreasing = logs.windows(2).all(|w| w[1] < w[0]);
    let (slope, r2) = linear_fit(ns, &logs);
    let mut c = Check::at_least(name, r2, 0.95, format!("slope {slope:.4} per unit n, values {values:?}"));
    c.pass &= decreasing && slope < 0.0;
    c
}

/// Exponential decay in `n` of the bulk density error, the Cauchy transform
/// and the kernel derivative at `z = 0.3 + 0.2i`.
pub fn bulk_decay() -> Check {
    let z = Complex64::new(0.3, 0.2);
    let ns = [8usize, 16, 32, 64];
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut rho = Vec::new();
    let mut cauchy = Vec::new();
    let mut dk = Vec::new();
    let mut parts = Vec::new();
    for &n in &ns {
        let p = params(0.5, 1.0, n);
        rho.push((density(z, &p) - 1.0 / PI).abs());
        dk.push(p.big_n() * density_gradient_cd(z, &p).norm());
        match cauchy_transform(z, &p) {
            Ok(c) => {
                parts.push(Check::at_most(format!("n={n} Cauchy normalization"), (c.normalization - 1.0).abs(), 1e-7, ""));
                parts.push(Check::at_most(format!("n={n} Cauchy quadrature error"), c.error, 0.1 * c.value.norm(), ""));
                cauchy.push(c.value.norm());
            }
            Err(e) => return Check::failed("bulk exponential decay", e.to_string()),
        }
    }
    parts.push(log_linear_decay("|rho_n - 1/pi|", &xs, &rho));
    parts.push(log_linear_decay("|Cauchy transform|", &xs, &cauchy));
    parts.push(log_linear_decay("|dK_n(z,z)/dz|", &xs, &dk));
    all_of("bulk exponential decay", parts)
}

/// Relative error of the asymptotic `p_n` at 20 points a unit distance or
/// more from the focal segment, for `N = 64` and `128`.
pub fn wkb_order() -> Check {
    let p64 = params(0.5, 1.0, 64);
    let p128 = params(0.5, 1.0, 128);
    let f0 = Geometry::new(&p64).foci();
    let (a, b) = (f0 + 1.5, 1.5);
    let rel = |z: Complex64, p: &EnsembleParams| -> Result<f64> {
        let exact = eval_poly(z, p.n(), p);
        let approx = wkb_eval_p(z, 0, p)?;
        Ok((approx.scaled_by(exact.log_mag) - exact.scaled_by(exact.log_mag)).norm())
    };
    let mut parts = Vec::new();
    for k in 0..20 {
        let alpha = (k as f64 + 0.5) * TAU / 20.0;
        let z = Complex64::new(a * alpha.cos(), b * alpha.sin());
        match (rel(z, &p64), rel(z, &p128)) {
            (Ok(e64), Ok(e128)) => {
                let ratio = e64 / e128;
                let name = format!("z={z:.3}");
                let mut c = Check::at_least(name, ratio, 3.0, format!("errors {e64:.3e}, {e128:.3e}"));
                c.pass &= ratio <= 5.0;
                parts.push(c);
            }
            (Err(e), _) | (_, Err(e)) => parts.push(Check::failed(format!("z={z:.3}"), e.to_string())),
        }
    }
    all_of("WKB error order", parts)
}

/// Residuals of the boundary identities at one frame, each scaled by the
/// size of its right side.
pub fn frame_identity_residuals(geom: &Geometry, frame: &BoundaryFrame) -> Result<Vec<(&'static str, f64)>> {
    let n = frame.normal;
    let k = frame.kappa;
    let k1 = frame.dkappa_ds;
    let k2 = frame.d2kappa_ds2;
    let a = frame.abs_dpsi;
    let t = geom.t();
    let tt = geom.total_mass();
    let [_, s1, s2, s3] = geom.schwarz_derivatives(frame.z0)?;
    let [psi, p1, p2, p3] = geom.psi_derivatives(frame.z0)?;
    let rel = |got: Complex64, want: Complex64, scale: f64| (got - want).norm() / (want.norm() + scale);
    let i = Complex64::i();
    let mut out = vec![
        ("n^2 S' = -1", rel(n * n * s1, Complex64::new(-1.0, 0.0), 1.0)),
        ("n^3 S'' = 2 kappa", rel(n.powi(3) * s2, Complex64::new(2.0 * k, 0.0), k)),
        ("n^4 S''' = -6 kappa^2 - 2i kappa'", rel(n.powi(4) * s3, -6.0 * k * k - 2.0 * i * k1, k * k)),
        ("|psi'|", ((p1.norm() - a) / a).abs()),
    ];
    let im = (psi * p2 / (p1 * p1)).im;
    out.push(("Im(psi psi''/psi'^2)", (im + k1 / (3.0 * a * k)).abs() / (1.0 + im.abs())));
    let re = (n * n * (p3 / p1 - p2 * p2 / (p1 * p1))).re;
    let re_want = k * k + k1 * k1 / (3.0 * k * k) - k2 / (3.0 * k) - a * k;
    out.push(("Re(n^2(psi'''/psi' - psi''^2/psi'^2))", (re - re_want).abs() / (re_want.abs() + k * k)));
    let c = tt.sqrt() / (1.0 - t * t).sqrt() * a / psi;
    let u1 = c * (n.conj() * t - n);
    let u2 = c * (n.conj() * t + n);
    out.push(("Upsilon minus", rel(u1, Complex64::new(-1.0, k1 / (3.0 * a * k)), 1.0)));
    out.push(("Upsilon plus", rel(u2, Complex64::new(k / a, 0.0), 1.0)));
    let p = EnsembleParams::new(t, tt, 1)?;
    let (h_re, h_im) = h_boundary_relations(frame, &p)?;
    let (want_re, want_im) = h_boundary_targets(frame);
    out.push(("Re(h_0 + h_-1)", (h_re - want_re).abs() / (want_re.abs() + k * k)));
    out.push(("Im(h_0 - h_-1)/|psi'|", (h_im - want_im).abs() / (want_im.abs() + k)));
    Ok(out)
}

/// Richardson-extrapolated central difference of `f` at `x`.
fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Curvature data against finite differences of the boundary curve:
/// `kappa` from differences of `gamma`, the arclength derivatives from
/// differences of the closed forms one order lower.
pub fn curvature_finite_differences(geom: &Geometry, theta: f64) -> [(f64, f64); 3] {
    let f = geom.boundary_frame(theta);
    let h = 1e-3;
    let g = |th: f64| geom.boundary_point(th);
    let d1 = Complex64::new(central_difference(|th| g(th).re, theta, h), central_difference(|th| g(th).im, theta, h));
    let d2 = {
        let second = |h: f64| (g(theta + h) - 2.0 * g(theta) + g(theta - h)) / (h * h);
        (4.0 * second(h / 2.0) - second(h)) / 3.0
    };
    let kappa_fd = (d2 * d1.conj()).im / d1.norm().powi(3);
    let speed = geom.speed(theta);
    let dk_fd = central_difference(|th| geom.boundary_frame(th).kappa, theta, h) / speed;
    let d2k_fd = central_difference(|th| geom.boundary_frame(th).dkappa_ds, theta, h) / speed;
    [(f.kappa, kappa_fd), (f.dkappa_ds, dk_fd), (f.d2kappa_ds2, d2k_fd)]
}

/// Curvature closed forms, the quoted values at the major axis, and the
/// boundary identities at 32 angles for several `t`.
pub fn boundary_geometry() -> Check {
    let mut parts = Vec::new();
    let mut worst_fd: f64 = 0.0;
    let mut worst_id: f64 = 0.0;
    let mut worst_name = "";
    for (t, tt) in [(0.5, 1.0), (0.25, 1.0), (0.75, 0.4375), (0.0, 2.0)] {
        let geom = Geometry::new(&params(t, tt, 1));
        for j in 0..32 {
            let theta = (j as f64 + 0.25) * TAU / 32.0;
            let f = geom.boundary_frame(theta);
            for (order, (closed, fd)) in curvature_finite_differences(&geom, theta).into_iter().enumerate() {
                let scale = f.kappa.powi(order as i32 + 1);
                worst_fd = worst_fd.max((closed - fd).abs() / (closed.abs() + scale));
            }
            match frame_identity_residuals(&geom, &f) {
                Ok(res) => {
                    for (name, r) in res {
                        if r > worst_id {
                            worst_id = r;
                            worst_name = name;
                        }
                    }
                }
                Err(e) => parts.push(Check::failed(format!("identities t={t}"), e.to_string())),
            }
        }
    }
    parts.push(Check::at_most("curvature vs finite differences", worst_fd, 1e-6, ""));
    parts.push(Check::at_most("boundary identities", worst_id, 1e-9, format!("worst: {worst_name}")));
    let f = Geometry::new(&params(0.5, 1.0, 1)).boundary_frame(0.0);
    parts.push(Check::at_most("kappa at major axis vs 5.19", (f.kappa - 5.19).abs(), 0.01, format!("{:.6}", f.kappa)));
    parts.push(Check::at_most("kappa' at major axis", f.dkappa_ds.abs(), 1e-12, ""));
    parts.push(Check::at_most("kappa'' at major axis vs -374", (f.d2kappa_ds2 + 374.0).abs(), 0.5, format!("{:.4}", f.d2kappa_ds2)));
    all_of("boundary geometry", parts)
}

fn omega_residual(geom: &Geometry, f: &BoundaryFrame, x: f64, y: f64) -> f64 {
    let z = f.z0 + x * f.normal + y * f.tangent;
    (geom.omega(z) - omega_edge_expansion(x, y, f)).abs()
}

/// Log-log slope of the degree-4 Taylor residual of `Omega` under halving.
pub fn omega_taylor() -> Check {
    let mut parts = Vec::new();
    for (t, theta) in [(0.5, 0.0), (0.5, PI / 5.0), (0.25, 1.0), (0.75, 2.0)] {
        let geom = Geometry::new(&params(t, 1.0, 1));
        let f = geom.boundary_frame(theta);
        let base = 0.04 / f.kappa;
        for (dx, dy) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-0.6, 0.8)] {
            let hs = [base, base / 2.0, base / 4.0];
            let res: Vec<f64> = hs.iter().map(|h| omega_residual(&geom, &f, dx * h, dy * h)).collect();
            let slope = (res[1] / res[2]).log2();
            parts.push(Check::at_least(format!("t={t},theta={theta:.3},dir=({dx},{dy})"), slope, 4.7, format!("residuals {res:?}")));
        }
    }
    all_of("Omega Taylor order", parts)
}

/// Outside-count sampling at `n = 2` against exact quadrature.
pub fn mcmc_outside(sweeps: usize) -> Check {
    let p = params(0.5, 1.0, 2);
    let mut cfg = SamplerConfig::new(p, 20240607, sweeps, 4);
    cfg.burn_in = sweeps / 100;
    let batch = match run(&cfg) {
        Ok(b) => b,
        Err(e) => return Check::failed("MCMC outside count", e.to_string()),
    };
    let exact = match expected_outside_exact(&p) {
        Ok(r) => r.n_out,
        Err(e) => return Check::failed("MCMC outside count", e.to_string()),
    };
    let parts = vec![
        Check::at_most(
            "|mean - exact| / stderr",
            (batch.mean_outside - exact).abs() / batch.stderr,
            3.0,
            format!("mean {:.5} +- {:.5}, exact {exact:.5}", batch.mean_outside, batch.stderr),
        ),
        Check::at_most("R-hat", batch.r_hat, 1.05, ""),
    ];
    all_of("MCMC outside count", parts)
}

/// Boundary-projection histogram at `n = 64` against the escape density.
pub fn arclength_histogram(sweeps: usize) -> Check {
    let p = params(0.5, 1.0, 64);
    let mut cfg = SamplerConfig::new(p, 7, sweeps, 4);
    cfg.burn_in = 2000.min(sweeps / 10);
    let batch = match run(&cfg) {
        Ok(b) => b,
        Err(e) => return Check::failed("arclength histogram", e.to_string()),
    };
    match histogram_chi2(&batch, &p) {
        Ok(h) => all_of(
            "arclength histogram",
            vec![
                Check::at_least("escapers", h.escapers as f64, 1e5, ""),
                Check::at_most("chi2/dof", h.per_dof(), 2.0, format!("chi2 {:.2}, dof {}", h.chi2, h.dof)),
            ],
        ),
        Err(e) => Check::failed("arclength histogram", e.to_string()),
    }
}

/// `N int rho_n dA = n` and the Gram matrix of `p_0..p_12`.
pub fn normalization() -> Check {
    let mut parts = Vec::new();
    for n in [8usize, 32, 64] {
        let p = params(0.5, 1.0, n);
        let r = integrate_refined(&p, Region::Plane, GridSpec::default(), 1, 1e-10, 1e-10, 3, |z, out| {
            out[0] = density(z, &p);
        });
        parts.push(match r {
            Ok(e) => Check::at_most(format!("mass n={n}"), (p.big_n() * e.value[0] - n as f64).abs() / n as f64, 1e-4, ""),
            Err(e) => Check::failed(format!("mass n={n}"), e.to_string()),
        });
    }
    parts.push(or_failed("orthonormality", orthonormality(12, &params(0.5, 1.0, 12))));
    all_of("normalization and orthonormality", parts)
}

/// `max_{j,k <= jmax} |int p_j conj(p_k) e^{-NV} dA - delta_jk|`.
pub fn orthonormality(jmax: usize, p: &EnsembleParams) -> Result<Check> {
    let m = jmax + 1;
    let spec = GridSpec { cutoff: 60.0, ..GridSpec::default() };
    let est = integrate_refined(p, Region::Plane, spec, 2 * m * m, 1e-10, 0.0, 3, |z, out| {
        let mut rec = Recurrence::new(z, p);
        let weight = -p.big_n() * p.potential(z);
        let mut values = Vec::with_capacity(m);
        for j in 0..m {
            if j > 0 {
                rec.advance();
            }
            values.push(rec.value().scale_log(0.5 * weight).to_complex());
        }
        for j in 0..m {
            for k in 0..m {
                let v = values[j] * values[k].conj();
                out[2 * (j * m + k)] = v.re;
                out[2 * (j * m + k) + 1] = v.im;
            }
        }
    })?;
    let mut worst: f64 = 0.0;
    for j in 0..m {
        for k in 0..m {
            let v = Complex64::new(est.value[2 * (j * m + k)], est.value[2 * (j * m + k) + 1]);
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((v - target).norm());
        }
    }
    Ok(Check::at_most(format!("Gram matrix j,k <= {jmax}"), worst, 1e-7, ""))
}

/// Tangential density derivative against the Christoffel–Darboux gradient.
/// Sensitive to the sign of the curvature derivative.
pub fn tangential_derivative() -> Check {
    let p = params(0.5, 1.0, 400);
    let geom = Geometry::new(&p);
    let mut parts = Vec::new();
    for theta in [PI / 6.0, 1.0, 2.0] {
        let f = geom.boundary_frame(theta);
        for y in [-0.02, 0.0, 0.02] {
            let z = f.z0 + y * f.tangent;
            let exact = directional_derivative(z, f.tangent, &p);
            let approx = dt_rho_expansion(0.0, y, &f, &p);
            parts.push(Check::at_most(format!("theta={theta:.3},Y={y}"), (exact - approx).abs() / approx.abs(), 0.05, format!("{exact:.5e} vs {approx:.5e}")));
        }
    }
    all_of("tangential derivative vs CD gradient", parts)
}

/// Normal density derivative against the Christoffel–Darboux gradient on
/// `|X| <= 2 / sqrt N`.
pub fn normal_derivative() -> Check {
    let p = params(0.5, 1.0, 400);
    let f = Geometry::new(&p).boundary_frame(PI / 6.0);
    let root = p.big_n().sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..=16 {
        let x = (-2.0 + 0.25 * i as f64) / root;
        let exact = directional_derivative(f.z0 + x * f.normal, f.normal, &p);
        let approx = dn_rho_expansion(x, &f, &p);
        worst = worst.max((exact - approx).abs() / dn_rho_expansion(0.0, &f, &p).abs());
    }
    Check::at_most("normal derivative vs CD gradient", worst, 2.0 / p.big_n(), "relative to the boundary value")
}

/// The tangential and normal routes to the density near the boundary.
pub fn tangential_routes() -> Check {
    let p = params(0.5, 1.0, 10_000);
    let f = Geometry::new(&p).boundary_frame(0.0);
    or_failed(
        "tangential consistency",
        tangential_consistency(1.0, &f, &p).map(|c| Check::at_most("tangential consistency", c.gap(), 3e-5, format!("{:.8} vs {:.8}", c.tangential, c.normal_route))),
    )
}

/// Runs the suite. `Fast` covers every criterion except the large sampling
/// runs, which it replaces by shorter ones; `Full` runs them at size and
/// adds the sweep over `t`.
pub fn run_suite(level: Level) -> Report {
    let mut checks = vec![
        table_exact(),
        table_asymptotic(),
        edge_profile(0.5, &[0.0, FRAC_PI_4], &[256, 512, 1024], Some(5.0)),
        boundary_value(),
        christoffel_darboux(),
        bulk_decay(),
        wkb_order(),
        boundary_geometry(),
        omega_taylor(),
        normalization(),
        tangential_derivative(),
        normal_derivative(),
        tangential_routes(),
    ];
    match level {
        Level::Fast => checks.push(mcmc_outside(100_000)),
        Level::Full => {
            checks.push(mcmc_outside(1_000_000));
            checks.push(arclength_histogram(30_000));
            for t in [0.0, 0.25, 0.75] {
                checks.push(edge_profile(t, &[0.0, FRAC_PI_4], &[256, 512, 1024], None));
            }
        }
    }
    Report { level, checks }
}
