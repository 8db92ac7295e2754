//! Ensemble parameters `(t, T, n, N)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The quadruple defining the ensemble: asymmetry `t`, total mass `T`,
/// particle count `n` and inverse temperature scale `N = n / T`.
///
/// The potential is `V(z) = |z|^2 - t Re(z^2)` and the droplet is the ellipse
/// `(1-t)/(1+t) x^2 + (1+t)/(1-t) y^2 <= T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnsembleParams {
    t: f64,
    total_mass: f64,
    n: usize,
    big_n: f64,
}

#[derive(Deserialize)]
struct RawParams {
    t: f64,
    #[serde(alias = "T")]
    total_mass: f64,
    n: usize,
}

impl<'de> Deserialize<'de> for EnsembleParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(d)?;
        EnsembleParams::new(raw.t, raw.total_mass, raw.n).map_err(serde::de::Error::custom)
    }
}

impl EnsembleParams {
    pub fn new(t: f64, total_mass: f64, n: usize) -> Result<Self> {
        if !(t.is_finite() && (0.0..1.0).contains(&t)) {
            return Err(Error::InvalidParams(format!("t must satisfy 0 <= t < 1, got {t}")));
        }
        if !(total_mass.is_finite() && total_mass > 0.0) {
            return Err(Error::InvalidParams(format!("T must satisfy T > 0, got {total_mass}")));
        }
        if n == 0 {
            return Err(Error::InvalidParams("n must satisfy n >= 1, got 0".into()));
        }
        Ok(Self { t, total_mass, n, big_n: n as f64 / total_mass })
    }

    /// Same `t` and `N` but with a different particle count (and hence `T`).
    /// The weight `e^{-NV}` is unchanged, only the droplet grows or shrinks.
    pub fn with_count(&self, n: usize) -> Result<Self> {
        let n = n.max(1);
        Self::new(self.t, n as f64 / self.big_n, n)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn big_n(&self) -> f64 {
        self.big_n
    }

    /// `V(z) = |z|^2 - t Re(z^2)`.
    pub fn potential(&self, z: num_complex::Complex64) -> f64 {
        z.norm_sqr() - self.t * (z.re * z.re - z.im * z.im)
    }
}
