//! Scalar coefficients of the stable subordinator series and the recursion
//! for `t`-derivatives of scaled densities.
//!
//! For `α = 2/m` every `a_j(q)` is an integer and the Pochhammer factors are
//! rational, so the power-rule identity can be checked in exact arithmetic.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_bigint::BigInt;
use num_rational::BigRational;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::{ln_gamma, sin_pi};

/// Exact rational number in lowest terms with positive denominator.
pub type Rational = BigRational;

/// Stability exponent `α ∈ (0, 2)` with the derived `β = α/2` and `2/α`.
///
/// `m` is present exactly when `α = 2/m` for an integer `m ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableIndex {
    alpha: f64,
    m: Option<u32>,
    beta: f64,
    inv: f64,
}

impl StableIndex {
    /// Builds an index from `α`. Values that round-trip as `2/m` get `m` attached.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
        }
        let m_guess = (2.0 / alpha).round();
        let m = if m_guess >= 2.0 && m_guess < f64::from(u32::MAX) && 2.0 / m_guess == alpha {
            Some(m_guess as u32)
        } else {
            None
        };
        Ok(Self { alpha, m, beta: 0.5 * alpha, inv: 2.0 / alpha })
    }

    /// `α = 2/m`, `m ≥ 2`.
    pub fn from_m(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(invalid("m", format!("m = {m} must be at least 2")));
        }
        let mf = f64::from(m);
        Ok(Self { alpha: 2.0 / mf, m: Some(m), beta: 1.0 / mf, inv: mf })
    }

    /// `α = 2/m` with the strict `m > 2` needed by the superharmonicity statement.
    pub fn theorem(m: u32) -> Result<Self> {
        if m <= 2 {
            return Err(invalid("m", format!("theorem mode needs m > 2, got {m}")));
        }
        Self::from_m(m)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `α / 2`, the index of the subordinator.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `2 / α`.
    pub fn inv(&self) -> f64 {
        self.inv
    }

    pub fn m(&self) -> Option<u32> {
        self.m
    }

    /// `m` if it is present and strictly greater than two.
    pub fn theorem_m(&self) -> Result<u32> {
        match self.m {
            Some(m) if m > 2 => Ok(m),
            _ => Err(invalid("alpha", format!("α = {} is not of the form 2/m with m > 2", self.alpha))),
        }
    }

    /// `sin(π k β)`, exactly zero whenever `kβ` is an integer.
    pub fn sin_pi_k_beta(&self, k: u32) -> f64 {
        match self.m {
            Some(m) => sin_pi(f64::from(k) / f64::from(m)),
            None => sin_pi(f64::from(k) * self.beta),
        }
    }
}

/// `ln(Γ(kβ+1) / (π k!))`, the magnitude envelope of `γ_k` without the sine.
pub fn gamma_envelope_ln(k: u32, idx: &StableIndex) -> f64 {
    let kf = f64::from(k);
    ln_gamma(kf * idx.beta + 1.0) - ln_gamma(kf + 1.0) - PI.ln()
}

/// `γ_k = (-1)^{k+1} Γ(kα/2+1) sin(πkα/2) / (π k!)`.
pub fn gamma_coefficient(k: u32, idx: &StableIndex) -> f64 {
    let s = idx.sin_pi_k_beta(k);
    if s == 0.0 {
        return 0.0;
    }
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    sign * s * gamma_envelope_ln(k, idx).exp()
}

/// `a_0(q), ..., a_q(q)` from the first-derivative recursion
/// `a_j(q+1) = (-2/α - q - 2j/α) a_j(q) - (2/α) a_{j-1}(q)`.
pub fn a_coefficients(q: u32, idx: &StableIndex) -> Vec<f64> {
    a_coefficients_for_inv(q, idx.inv)
}

fn a_coefficients_for_inv(q: u32, inv: f64) -> Vec<f64> {
    let mut a = vec![1.0];
    for step in 0..q {
        let qf = f64::from(step);
        let mut next = vec![0.0; a.len() + 1];
        for (j, slot) in next.iter_mut().enumerate() {
            let jf = j as f64;
            let keep = a.get(j).map_or(0.0, |aj| (-inv - qf - jf * inv) * aj);
            let shift = if j > 0 { -inv * a[j - 1] } else { 0.0 };
            *slot = keep + shift;
        }
        a = next;
    }
    a
}

/// Exact `a_j(q)` for `α = 2/m` (they are integers).
pub fn a_coefficients_exact(q: u32, m: u32) -> Vec<BigInt> {
    let mb = BigInt::from(m);
    let mut a = vec![BigInt::one()];
    for step in 0..q {
        let qb = BigInt::from(step);
        let mut next = vec![BigInt::zero(); a.len() + 1];
        for (j, slot) in next.iter_mut().enumerate() {
            let jb = BigInt::from(j);
            let mut v = BigInt::zero();
            if let Some(aj) = a.get(j) {
                v += (-&mb - &qb - &jb * &mb) * aj;
            }
            if j > 0 {
                v -= &mb * &a[j - 1];
            }
            *slot = v;
        }
        a = next;
    }
    a
}

/// `Σ_j a_j(q) (-1)^j (kα/2 + 1)_j` in floating point.
///
/// Applying the `q`-th derivative to `t^k` shows this equals `k!/(k-q)!`:
/// zero for `k < q` and `q!` for `k = q`. The terms cancel heavily, so the
/// recursion and the sum run in double-double arithmetic.
pub fn power_rule_sum(q: u32, k: u32, alpha: f64) -> f64 {
    let inv = Dd::quotient(2.0, alpha);
    let mut a = vec![Dd::from(1.0)];
    for step in 0..q {
        let mut next = vec![Dd::from(0.0); a.len() + 1];
        for (j, slot) in next.iter_mut().enumerate() {
            // (-inv - step - j·inv) a_j - inv a_{j-1}
            let factor = inv.mul(Dd::from(-1.0 - j as f64)).add(Dd::from(-f64::from(step)));
            let mut v = a.get(j).map_or(Dd::from(0.0), |aj| factor.mul(*aj));
            if j > 0 {
                v = v.add(inv.mul(a[j - 1]).neg());
            }
            *slot = v;
        }
        a = next;
    }
    let base = Dd::from(0.5 * alpha).mul(Dd::from(f64::from(k)));
    let mut poch = Dd::from(1.0);
    let mut acc = Dd::from(0.0);
    for (j, aj) in a.iter().enumerate() {
        let term = aj.mul(poch);
        acc = acc.add(if j % 2 == 0 { term } else { term.neg() });
        poch = poch.mul(base.add(Dd::from(1.0 + j as f64)));
    }
    acc.hi + acc.lo
}

/// Unevaluated sum `hi + lo` carrying about 32 significant digits.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn quotient(a: f64, b: f64) -> Self {
        let hi = a / b;
        let lo = (-hi).mul_add(b, a) / b;
        Self::renorm(hi, lo)
    }

    fn renorm(a: f64, b: f64) -> Self {
        let s = a + b;
        Self { hi: s, lo: b - (s - a) }
    }

    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    fn add(self, o: Self) -> Self {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (o.hi - bb);
        Self::renorm(s, err + self.lo + o.lo)
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let err = self.hi.mul_add(o.hi, -p);
        Self::renorm(p, err + self.hi * o.lo + self.lo * o.hi)
    }
}

/// Exact `Σ_j a_j(q) (-1)^j (k/m + 1)_j` for `α = 2/m`.
pub fn power_rule_sum_exact(q: u32, k: u32, m: u32) -> Rational {
    let a = a_coefficients_exact(q, m);
    let base = Rational::new(BigInt::from(k), BigInt::from(m)) + Rational::one();
    let mut poch = Rational::one();
    let mut acc = Rational::zero();
    for (j, aj) in a.iter().enumerate() {
        let term = Rational::from_integer(aj.clone()) * &poch;
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
        poch *= &base + Rational::from_integer(BigInt::from(j));
    }
    acc
}

/// Exact power-rule identity check: returns the sum, or an error if it is not
/// `0` for `k < q` and `q!` for `k = q`.
pub fn check_power_rule_identity(q: u32, k: u32, idx: &StableIndex) -> Result<Rational> {
    let m = idx.m().ok_or_else(|| invalid("alpha", "exact mode needs α = 2/m"))?;
    if k > q {
        return Err(invalid("k", format!("k = {k} exceeds q = {q}")));
    }
    let sum = power_rule_sum_exact(q, k, m);
    let expected = if k < q {
        Rational::zero()
    } else {
        Rational::from_integer((1..=q).fold(BigInt::one(), |acc, i| acc * BigInt::from(i)))
    };
    if sum == expected {
        Ok(sum)
    } else {
        Err(Error::IdentityViolated { what: format!("q={q}, k={k}, m={m}: got {sum}, expected {expected}") })
    }
}

/// Normalising constant of the jump kernel,
/// `c_{d,α} = 2^α π^{-1-d/2} Γ((d+α)/2) Γ(1+α/2) sin(πα/2)`.
pub fn riesz_constant(d: u32, idx: &StableIndex) -> Result<f64> {
    if d == 0 {
        return Err(invalid("d", "dimension must be positive"));
    }
    let a = idx.alpha;
    let df = f64::from(d);
    let ln = a * 2f64.ln() + (-1.0 - 0.5 * df) * PI.ln() + ln_gamma(0.5 * (df + a)) + ln_gamma(1.0 + 0.5 * a);
    Ok(ln.exp() * sin_pi(0.5 * a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignEntry {
    pub q: u32,
    /// `(-1)^q γ_q`.
    pub value: f64,
    pub sign: Sign,
}

/// Signs of `(-1)^q γ_q` for `q = 0, ..., m-1` at `α = 2/m`.
pub fn sign_ledger(m: u32) -> Result<Vec<SignEntry>> {
    let idx = StableIndex::theorem(m)?;
    Ok((0..m)
        .map(|q| {
            let parity = if q % 2 == 0 { 1.0 } else { -1.0 };
            let value = parity * gamma_coefficient(q, &idx);
            let sign = if value < 0.0 {
                Sign::Negative
            } else if value > 0.0 {
                Sign::Positive
            } else {
                Sign::Zero
            };
            SignEntry { q, value, sign }
        })
        .collect())
}
