//! Scalar special functions: `erfc`, complete elliptic integrals, `ln j!`
//! and streaming log-sum-exp.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Complementary error function.
///
/// `|x| < 2` uses the everywhere-positive series
/// `erf x = 2/sqrt(pi) e^{-x^2} sum 2^k x^{2k+1} / (2k+1)!!`;
/// `x >= 2` uses the Laplace continued fraction. Negative arguments go
/// through `erfc(-x) = 2 - erfc(x)`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

pub fn erf(x: f64) -> f64 {
    if x.abs() < 2.0 {
        erf_series(x)
    } else {
        1.0 - erfc(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// `erfc x = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated with the modified Lentz algorithm.
fn erfc_continued_fraction(x: f64) -> f64 {
    if x > 27.3 {
        return 0.0;
    }
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Arithmetic–geometric mean iterates `(a_n, c_n)` starting from `a=1, b=k'`, `c=k`.
fn agm(k: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = (1.0 - k * k).sqrt();
    let mut c = k;
    let mut weight = 0.5;
    let mut csum = weight * c * c;
    for _ in 0..64 {
        if c.abs() <= 1e-15 * a {
            break;
        }
        let a_next = 0.5 * (a + b);
        c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = a_next;
        weight *= 2.0;
        csum += weight * c * c;
    }
    (a, csum)
}

/// Complete elliptic integral of the first kind, modulus convention:
/// `K(k) = int_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2 theta)`.
pub fn ellip_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k.abs()) {
        return Err(Error::Domain(format!("ellip_k requires |k| < 1, got {k}")));
    }
    let (a, _) = agm(k);
    Ok(FRAC_PI_2 / a)
}

/// Complete elliptic integral of the second kind,
/// `E(k) = int_0^{pi/2} sqrt(1 - k^2 sin^2 theta) dtheta`.
pub fn ellip_e(k: f64) -> Result<f64> {
    let ak = k.abs();
    if ak.is_nan() || ak > 1.0 {
        return Err(Error::Domain(format!("ellip_e requires |k| <= 1, got {k}")));
    }
    if ak == 1.0 {
        return Ok(1.0);
    }
    let (a, csum) = agm(ak);
    Ok(FRAC_PI_2 / a * (1.0 - csum))
}

const EXACT_FACTORIAL_LIMIT: usize = 256;

fn log_factorial_table() -> &'static [f64; EXACT_FACTORIAL_LIMIT + 1] {
    static TABLE: OnceLock<[f64; EXACT_FACTORIAL_LIMIT + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0.0; EXACT_FACTORIAL_LIMIT + 1];
        let mut sum = NeumaierSum::default();
        for (j, slot) in table.iter_mut().enumerate().skip(1) {
            sum.add((j as f64).ln());
            *slot = sum.value();
        }
        table
    })
}

/// `ln j!`: compensated exact summation for `j <= 256`, Stirling series beyond.
pub fn log_factorial(j: u64) -> f64 {
    if (j as usize) <= EXACT_FACTORIAL_LIMIT {
        return log_factorial_table()[j as usize];
    }
    let x = j as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + series
}

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Streaming `ln sum_i exp(x_i)` with running-max rescaling.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
    count: usize,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, scaled_sum: 0.0, count: 0 }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled_sum += (x - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::Domain("log-sum-exp of an empty stream".into()));
        }
        if self.max == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.max + self.scaled_sum.ln())
    }
}

impl Extend<f64> for LogSumExp {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

pub fn logsumexp_accumulate(terms: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut acc = LogSumExp::default();
    acc.extend(terms);
    acc.value()
}
