//! Scalar special functions and summation helpers shared by the series
//! evaluators and the quadrature code.

use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

/// `ln Γ(x)` for `x > 0`.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `Γ(x)`.
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `sin(πx)` with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    let a = r.abs();
    if a == 0.0 || a == 1.0 {
        return 0.0;
    }
    let y = if a > 0.5 { 1.0 - a } else { a };
    r.signum() * (PI * y).sin()
}

/// Pochhammer symbol `(a)_j = a (a+1) ... (a+j-1)`.
pub fn rising_factorial(a: f64, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (a + f64::from(i)))
}

/// `k (k-1) ... (k-q+1)`, zero when `q > k`.
pub fn falling_factorial(k: u32, q: u32) -> f64 {
    if q > k {
        return 0.0;
    }
    (0..q).fold(1.0, |acc, i| acc * f64::from(k - i))
}

/// `q!` as a float.
pub fn factorial(q: u32) -> f64 {
    falling_factorial(q, q)
}

/// `(e^x - 1) / x`, continuous at zero.
pub fn exprel(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// Running sum with Neumaier's error-free correction.
///
/// Also tracks the sum of magnitudes so callers can read off the
/// cancellation ratio `sum |x_i| / |sum x_i|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    magnitude: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.magnitude += x.abs();
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of `|x_i|` over everything added so far.
    #[inline]
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }
}

impl core::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
