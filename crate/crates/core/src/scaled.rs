//! Complex numbers stored as `(log |z|, arg z)`.
//!
//! Orthonormal polynomials and the Gaussian weight overflow separately at
//! moderate `n`; only products such as `|p_j|^2 e^{-NV}` are O(1).

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `value = exp(log_mag) * exp(i phase)`, phase in `(-pi, pi]`.
///
/// Exact zero is represented by `log_mag = -inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    pub log_mag: f64,
    pub phase: f64,
}

fn wrap_phase(phase: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut p = phase.rem_euclid(two_pi);
    if p > std::f64::consts::PI {
        p -= two_pi;
    }
    p
}

impl ScaledComplex {
    pub const ZERO: ScaledComplex = ScaledComplex { log_mag: f64::NEG_INFINITY, phase: 0.0 };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        Self { log_mag, phase: wrap_phase(phase) }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z == Complex64::new(0.0, 0.0) {
            return Self::ZERO;
        }
        Self { log_mag: z.norm().ln(), phase: z.arg() }
    }

    /// From a complex logarithm `log z = ln|z| + i arg z` (any branch).
    pub fn from_log(log: Complex64) -> Self {
        Self::new(log.re, log.im)
    }

    pub fn is_zero(&self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn to_complex(&self) -> Complex64 {
        self.scaled_by(0.0)
    }

    /// `value * exp(-log_ref)`, for bringing a family of values onto a common scale.
    pub fn scaled_by(&self, log_ref: f64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar((self.log_mag - log_ref).exp(), self.phase)
    }

    pub fn conj(&self) -> Self {
        Self { log_mag: self.log_mag, phase: wrap_phase(-self.phase) }
    }

    pub fn abs(&self) -> f64 {
        self.log_mag.exp()
    }

    pub fn powi(&self, k: i32) -> Self {
        if self.is_zero() {
            return if k == 0 { Self::new(0.0, 0.0) } else { Self::ZERO };
        }
        Self::new(self.log_mag * k as f64, self.phase * k as f64)
    }

    pub fn scale_log(&self, log_factor: f64) -> Self {
        Self { log_mag: self.log_mag + log_factor, phase: self.phase }
    }
}

impl Mul for ScaledComplex {
    type Output = ScaledComplex;
    fn mul(self, rhs: ScaledComplex) -> ScaledComplex {
        if self.is_zero() || rhs.is_zero() {
            return ScaledComplex::ZERO;
        }
        ScaledComplex::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

/// Sum of scaled complex values, returned on a common scale.
pub fn sum_scaled(values: impl IntoIterator<Item = ScaledComplex>) -> ScaledComplex {
    let values: Vec<ScaledComplex> = values.into_iter().collect();
    let log_ref = values.iter().map(|v| v.log_mag).fold(f64::NEG_INFINITY, f64::max);
    if log_ref == f64::NEG_INFINITY {
        return ScaledComplex::ZERO;
    }
    let parts: Vec<Complex64> = values.iter().map(|v| v.scaled_by(log_ref)).collect();
    ScaledComplex::from_complex(crate::quadrature::pairwise_sum_complex(&parts)).scale_log(log_ref)
}
