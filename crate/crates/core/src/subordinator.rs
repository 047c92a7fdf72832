//! One-sided `α/2`-stable subordinator: density series, `t`-derivatives,
//! Laplace certificate and Kanter sampling.
//!
//! The convergent series `f_1(s) = Σ γ_k s^{-kβ-1}` cancels heavily as
//! `s → 0`; the ratio `Σ|terms| / f_1` grows like `exp(2 E(s))` with
//! `E(s) = (1-β) β^{β/(1-β)} s^{-β/(1-β)}`. Below the certified boundary the
//! series result is flagged, and quadrature consumers switch to Kanter's
//! integral representation, which is exact and positive there.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::coefficients::{a_coefficients, gamma_coefficient, gamma_envelope_ln, StableIndex};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_power_tail, integrate_with_breaks, QuadratureSpec};
use crate::special::{falling_factorial, rising_factorial, CompensatedSum};

/// Truncation and trust controls for the density series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPolicy {
    pub max_terms: usize,
    pub rel_stop: f64,
    /// Smallest argument of `f_1` at which the series result is trusted.
    pub s_min_certified: f64,
}

impl SeriesPolicy {
    pub const DEFAULT_MAX_TERMS: usize = 200;
    pub const DEFAULT_REL_STOP: f64 = 1e-16;
    /// Largest tolerated `E(s)`; cancellation costs about `2E / ln 10` digits.
    pub const DEFAULT_CANCELLATION_EXPONENT: f64 = 5.75;

    /// Default policy with the certified boundary placed where `E(s)` reaches
    /// [`Self::DEFAULT_CANCELLATION_EXPONENT`].
    pub fn for_index(idx: &StableIndex) -> Self {
        Self {
            max_terms: Self::DEFAULT_MAX_TERMS,
            rel_stop: Self::DEFAULT_REL_STOP,
            s_min_certified: cancellation_boundary(idx, Self::DEFAULT_CANCELLATION_EXPONENT),
        }
    }

    pub fn new(max_terms: usize, rel_stop: f64, s_min_certified: f64) -> Result<Self> {
        let p = Self { max_terms, rel_stop, s_min_certified };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 10 {
            return Err(invalid("max_terms", format!("{} is below 10", self.max_terms)));
        }
        if !(self.rel_stop > 0.0 && self.rel_stop < 1e-6) {
            return Err(invalid("rel_stop", format!("{} is outside (0, 1e-6)", self.rel_stop)));
        }
        if !(self.s_min_certified > 0.0 && self.s_min_certified.is_finite()) {
            return Err(invalid("s_min_certified", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Argument `s` at which the cancellation exponent `E(s)` equals `exponent`.
pub fn cancellation_boundary(idx: &StableIndex, exponent: f64) -> f64 {
    let beta = idx.beta();
    let e0 = kanter_floor(beta);
    (e0 / exponent).powf((1.0 - beta) / beta)
}

/// Cancellation exponent `E(s)`; also the minimum of `A(φ) s^{-b}` in the
/// Kanter representation.
pub fn cancellation_exponent(idx: &StableIndex, s: f64) -> f64 {
    let beta = idx.beta();
    kanter_floor(beta) * s.powf(-beta / (1.0 - beta))
}

/// `A(0+) = (1-β) β^{β/(1-β)}`.
fn kanter_floor(beta: f64) -> f64 {
    (1.0 - beta) * beta.powf(beta / (1.0 - beta))
}

/// `ln A(φ)` with `A(φ) = [sin((1-β)φ)^{1-β} sin(βφ)^β / sin φ]^{1/(1-β)}`.
fn kanter_ln_a(phi: f64, beta: f64) -> f64 {
    let b1 = 1.0 - beta;
    (b1 * (b1 * phi).sin().ln() + beta * (beta * phi).sin().ln() - phi.sin().ln()) / b1
}

/// A density value with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEval {
    pub value: f64,
    pub terms_used: usize,
    /// Magnitude bound of the first omitted term.
    pub tail_estimate: f64,
    /// False below the certified boundary, when `max_terms` was exhausted, or
    /// when the terms cancel too much for double precision.
    pub certified: bool,
}

/// Evaluator for `W(u) = Σ_j w_j u^j f_1^{(j)}(u)` for fixed weights `w_j`.
///
/// With `w = e_n` this is `u^n f_1^{(n)}(u)`; with `w_j = a_j(q)` it is the
/// bracket in `∂_t^q f_t(s) = t^{-2/α-q} Σ_j a_j(q) u^j f_1^{(j)}(u)`,
/// `u = t^{-2/α} s`. Each series term is an explicit power of `u`, so the
/// weights are folded into per-term coefficients once.
#[derive(Debug, Clone)]
pub struct DensitySeries {
    idx: StableIndex,
    policy: SeriesPolicy,
    weights: Vec<f64>,
    /// `(-1)^{k+1} sin(πkβ) Σ_j w_j (-1)^j (kβ+1)_j`, index `k-1`.
    coef: Vec<f64>,
    /// `Σ_j |w_j| (kβ+1)_j`, bounds `|coef|` by the sine-free envelope.
    bound: Vec<f64>,
    /// `ln(Γ(β+1)/π)`, the envelope of the first term.
    first_ln: f64,
    /// `Γ(kβ+1)/k! / (Γ((k-1)β+1)/(k-1)!)`, index `k-1`, first entry unused.
    ratio: Vec<f64>,
    kanter_b: f64,
    /// `(-b)(-b-1)...(-b-i+1)` for `i = 0..=len(weights)`.
    kanter_ff: Vec<f64>,
    /// Terms `k ≤ skipped` were dropped; the Kanter route no longer applies.
    skipped: u32,
}

/// Result of one series summation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SeriesSum {
    value: f64,
    terms: usize,
    tail: f64,
    converged: bool,
    /// `Σ|terms| / |sum|`.
    cancellation: f64,
}

impl SeriesSum {
    fn trusted(&self) -> bool {
        self.converged && self.cancellation <= MAX_CANCELLATION
    }
}

/// Largest accepted `Σ|terms| / |sum|`; rounding then costs at most about
/// `1e-10` relative.
const MAX_CANCELLATION: f64 = 1e5;

impl DensitySeries {
    pub fn with_weights(idx: &StableIndex, policy: &SeriesPolicy, weights: Vec<f64>) -> Result<Self> {
        policy.validate()?;
        if weights.is_empty() {
            return Err(invalid("weights", "need at least one weight"));
        }
        let beta = idx.beta();
        let n = policy.max_terms;
        let mut coef = Vec::with_capacity(n);
        let mut bound = Vec::with_capacity(n);
        let mut ratio = Vec::with_capacity(n);
        let mut prev_ln = 0.0;
        for k in 1..=n as u32 {
            let base = f64::from(k) * beta + 1.0;
            let mut c = CompensatedSum::new();
            let mut b = 0.0;
            let mut poch = 1.0;
            for (j, w) in weights.iter().enumerate() {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                c.add(sign * w * poch);
                b += w.abs() * poch;
                poch *= base + j as f64;
            }
            let parity = if k % 2 == 1 { 1.0 } else { -1.0 };
            coef.push(parity * idx.sin_pi_k_beta(k) * c.value());
            bound.push(b);
            let ln = gamma_envelope_ln(k, idx);
            ratio.push(if k == 1 { 1.0 } else { (ln - prev_ln).exp() });
            prev_ln = ln;
        }
        let kanter_b = beta / (1.0 - beta);
        let mut kanter_ff = vec![1.0];
        for i in 0..weights.len() {
            let last = kanter_ff[i];
            kanter_ff.push(last * (-kanter_b - i as f64));
        }
        Ok(Self {
            idx: *idx,
            policy: *policy,
            first_ln: gamma_envelope_ln(1, idx),
            weights,
            coef,
            bound,
            ratio,
            kanter_b,
            kanter_ff,
            skipped: 0,
        })
    }

    /// Drops the terms `k ≤ k_max`, leaving the remainder `Σ_{k > k_max}`.
    ///
    /// The result is evaluated by the series only, so it is meant for
    /// arguments well inside the certified regime.
    pub fn without_leading_terms(mut self, k_max: u32) -> Self {
        let cut = (k_max as usize).min(self.coef.len());
        for c in &mut self.coef[..cut] {
            *c = 0.0;
        }
        self.skipped = k_max;
        self
    }

    /// `f_1` itself.
    pub fn density(idx: &StableIndex, policy: &SeriesPolicy) -> Result<Self> {
        Self::with_weights(idx, policy, vec![1.0])
    }

    /// `u^n f_1^{(n)}(u)`.
    pub fn scaled_derivative(n: u32, idx: &StableIndex, policy: &SeriesPolicy) -> Result<Self> {
        let mut w = vec![0.0; n as usize + 1];
        w[n as usize] = 1.0;
        Self::with_weights(idx, policy, w)
    }

    /// The bracket of the `q`-th `t`-derivative, weights `a_j(q)`.
    pub fn time_derivative(q: u32, idx: &StableIndex, policy: &SeriesPolicy) -> Result<Self> {
        Self::with_weights(idx, policy, a_coefficients(q, idx))
    }

    pub fn index(&self) -> &StableIndex {
        &self.idx
    }

    pub fn policy(&self) -> &SeriesPolicy {
        &self.policy
    }

    fn sum(&self, u: f64) -> SeriesSum {
        let beta = self.idx.beta();
        let ln_u = u.ln();
        let z = (-beta * ln_u).exp();
        let mut env = (self.first_ln - (beta + 1.0) * ln_u).exp();
        let mut acc = CompensatedSum::new();
        let mut prev_bound = f64::INFINITY;
        for k in 0..self.coef.len() {
            if k > 0 {
                env *= self.ratio[k] * z;
            }
            let b = env * self.bound[k];
            let value = acc.value();
            if k >= self.weights.len() && b < prev_bound && (b == 0.0 || b < self.policy.rel_stop * value.abs()) {
                return SeriesSum { value, terms: k, tail: b, converged: true, cancellation: acc.magnitude() / value.abs() };
            }
            acc.add(self.coef[k] * env);
            prev_bound = b;
        }
        let value = acc.value();
        SeriesSum { value, terms: self.coef.len(), tail: prev_bound, converged: false, cancellation: acc.magnitude() / value.abs() }
    }

    /// Series value at `u` with its certification flag.
    pub fn series(&self, u: f64) -> DensityEval {
        let s = self.sum(u);
        DensityEval {
            value: s.value,
            terms_used: s.terms,
            tail_estimate: s.tail,
            certified: s.trusted() && u >= self.policy.s_min_certified,
        }
    }

    /// Kanter integral for `W(u)`, exact in exact arithmetic for every `u > 0`.
    ///
    /// `u^j f^{(j)}(u) = (π u)^{-1} ∫_0^π G_{j+1}(y) e^{-y} dφ` with
    /// `y = A(φ) u^{-b}` and `G_n` the polynomial from the derivatives of
    /// `exp(-A u^{-b})`.
    pub fn kanter(&self, u: f64) -> f64 {
        let beta = self.idx.beta();
        let ln_w = -self.kanter_b * u.ln();
        if (kanter_floor(beta).ln() + ln_w).exp() > 745.0 {
            return 0.0;
        }
        let order = self.weights.len();
        let mut g = vec![0.0; order + 1];
        let mut h = vec![0.0; order + 1];
        let mut integrand = |phi: f64| {
            let y = (kanter_ln_a(phi, beta) + ln_w).exp();
            if !(y < 745.0) {
                return 0.0;
            }
            for i in 1..=order {
                h[i] = -y * self.kanter_ff[i];
            }
            g[0] = 1.0;
            for n in 1..=order {
                let mut acc = 0.0;
                let mut binom = 1.0;
                for k in 0..n {
                    acc += binom * h[k + 1] * g[n - 1 - k];
                    binom = binom * (n - 1 - k) as f64 / (k + 1) as f64;
                }
                g[n] = acc;
            }
            let mut total = 0.0;
            for (j, w) in self.weights.iter().enumerate() {
                total += w * g[j + 1];
            }
            total * (-y).exp()
        };
        let spec = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-13, max_subdivisions: 400, split_multiplier: 10.0 };
        let r = integrate_with_breaks(&mut integrand, &[0.0, PI / 16.0, PI / 4.0, PI], &spec);
        r.value / (PI * u)
    }

    /// Series above the certified boundary, Kanter integral below it.
    pub fn eval(&self, u: f64) -> f64 {
        if self.skipped > 0 {
            return self.sum(u).value;
        }
        if u >= self.policy.s_min_certified {
            let s = self.sum(u);
            if s.trusted() {
                return s.value;
            }
        }
        self.kanter(u)
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{v} must be positive and finite")))
    }
}

/// `f_1(s)` by the series, flagged below the certified boundary.
pub fn density_f1(s: f64, idx: &StableIndex, policy: &SeriesPolicy) -> Result<DensityEval> {
    check_positive("s", s)?;
    Ok(DensitySeries::density(idx, policy)?.series(s))
}

/// `f_t(s) = t^{-2/α} f_1(t^{-2/α} s)`.
pub fn density_ft(t: f64, s: f64, idx: &StableIndex, policy: &SeriesPolicy) -> Result<DensityEval> {
    density_dt_q(0, t, s, idx, policy)
}

/// `∂_t^q f_t(s) = t^{-2/α-q} Σ_j a_j(q) u^j f_1^{(j)}(u)`, `u = t^{-2/α} s`.
pub fn density_dt_q(q: u32, t: f64, s: f64, idx: &StableIndex, policy: &SeriesPolicy) -> Result<DensityEval> {
    check_positive("t", t)?;
    check_positive("s", s)?;
    let series = DensitySeries::time_derivative(q, idx, policy)?;
    let scale = t.powf(-idx.inv() - f64::from(q));
    let e = series.series(s * t.powf(-idx.inv()));
    Ok(DensityEval { value: scale * e.value, tail_estimate: scale * e.tail_estimate, ..e })
}

/// Integrates `h(u) W(u)` over `u ∈ (0, ∞)`, where `h` decays no slower than
/// a constant and `W` is the series bracket (tail `u^{-1-κ}`).
///
/// Breakpoints sit at the certified boundary and at the caller's scales.
pub(crate) fn integrate_against<F: FnMut(f64) -> f64>(
    series: &DensitySeries,
    mut h: F,
    scales: &[f64],
    kappa: f64,
    spec: &QuadratureSpec,
) -> crate::quadrature::Integral {
    let s_min = series.policy().s_min_certified;
    let mut pts: Vec<f64> = vec![0.0, s_min, 4.0 * s_min, 0.25, 1.0, 4.0];
    pts.extend(scales.iter().copied().filter(|x| *x > 0.0 && x.is_finite()));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let split = pts[pts.len() - 1];
    let mut f = |u: f64| {
        let hv = h(u);
        if hv == 0.0 {
            0.0
        } else {
            hv * series.eval(u)
        }
    };
    let left = integrate_with_breaks(&mut f, &pts, spec);
    let right = integrate_power_tail(&mut f, split, kappa, spec);
    left.combine(right)
}

/// `|∫_0^∞ e^{-λs} f_t(s) ds - exp(-t λ^{α/2})|`.
pub fn laplace_residual(lambda: f64, t: f64, idx: &StableIndex, quad: &QuadratureSpec) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("t", t)?;
    quad.validate()?;
    let series = DensitySeries::density(idx, &SeriesPolicy::for_index(idx))?;
    let rate = lambda * t.powf(idx.inv());
    let scales = [0.1 / rate, 1.0 / rate, 10.0 / rate, 50.0 / rate];
    let r = integrate_against(&series, |u| (-rate * u).exp(), &scales, idx.beta(), quad);
    let value = r.require(quad)?;
    Ok((value - (-t * lambda.powf(idx.beta())).exp()).abs())
}

/// Relative defect of `-γ_k (k/m + 1) = (-1)^m γ_{k+m} (k+m)!/k!`, the
/// termwise form of `(∂_s - (-1)^m ∂_t^m) f_t(s) = 0` for `α = 2/m`.
pub fn pde_coefficient_residual(k: u32, m: u32) -> Result<f64> {
    let idx = StableIndex::theorem(m)?;
    let lhs = -gamma_coefficient(k, &idx) * (f64::from(k) / f64::from(m) + 1.0);
    let parity = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let rhs = parity * gamma_coefficient(k + m, &idx) * falling_factorial(k + m, m);
    let scale = lhs.abs().max(rhs.abs());
    Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale })
}

/// `|f_1^{(n)}(s)|` along a decreasing list of arguments, stopping at the
/// certified boundary.
pub fn boundary_limit_probe(n: u32, idx: &StableIndex, s_list: &[f64], policy: &SeriesPolicy) -> Result<Vec<f64>> {
    if s_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("s_list", "arguments must be strictly decreasing"));
    }
    let series = DensitySeries::scaled_derivative(n, idx, policy)?;
    let mut out = Vec::with_capacity(s_list.len());
    for &s in s_list {
        check_positive("s", s)?;
        let e = series.series(s);
        if !e.certified {
            break;
        }
        out.push((e.value / s.powi(n as i32)).abs());
    }
    if out.is_empty() && !s_list.is_empty() {
        return Err(Error::Uncertified { s: s_list[0], boundary: policy.s_min_certified });
    }
    Ok(out)
}

/// Draws `Δσ = dt^{1/β} S` with `S` standard one-sided `β`-stable
/// (`E e^{-λS} = e^{-λ^β}`) by Kanter's representation
/// `S = (A(πU) / E)^{(1-β)/β}`, `U` uniform, `E` unit exponential.
pub fn sample_subordinator_increment<R: Rng + ?Sized>(dt: f64, idx: &StableIndex, rng: &mut R) -> f64 {
    let beta = idx.beta();
    let u: f64 = Open01.sample(rng);
    let e: f64 = Exp1.sample(rng);
    let ln_s = (1.0 - beta) / beta * (kanter_ln_a(PI * u, beta) - e.ln());
    (ln_s + dt.ln() / beta).exp()
}

/// `q`-th derivative in `t` by the power rule on `f_t(s) = Σ γ_k t^k s^{-kβ-1}`.
///
/// Independent of the `a_j(q)` route; exposed for diagnostics and tests.
pub fn density_dt_q_power_rule(q: u32, t: f64, s: f64, idx: &StableIndex, max_terms: u32) -> f64 {
    let beta = idx.beta();
    let mut acc = CompensatedSum::new();
    for k in q.max(1)..=max_terms {
        let g = gamma_coefficient(k, idx);
        if g == 0.0 {
            continue;
        }
        let kf = f64::from(k);
        let ln = f64::from(k - q) * t.ln() - (kf * beta + 1.0) * s.ln();
        acc.add(g * falling_factorial(k, q) * ln.exp());
    }
    acc.value()
}

/// `(kβ+1)_j`, exposed for tests of the termwise derivative.
pub fn pochhammer_shift(k: u32, j: u32, idx: &StableIndex) -> f64 {
    rising_factorial(f64::from(k) * idx.beta() + 1.0, j)
}
