//! Gaussian kernel, stable transition density by subordination, the 1D
//! Fourier oracle, semigroup application and the closed-form inner integral.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::coefficients::StableIndex;
use crate::error::{invalid, Result};
use crate::quadrature::{integrate, integrate_power_tail, integrate_with_breaks, sum_alternating, FixedRule, Integral, QuadratureSpec};
use crate::special::ln_gamma;
use crate::subordinator::{DensitySeries, SeriesPolicy};

/// A point of `ℝ^d`, `1 ≤ d ≤ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: [f64; 3],
    dim: usize,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > 3 {
            return Err(invalid("point", format!("dimension {} is outside 1..=3", coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point", "coordinates must be finite"));
        }
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self { coords: c, dim: coords.len() })
    }

    pub fn scalar(x: f64) -> Self {
        Self { coords: [x, 0.0, 0.0], dim: 1 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn distance_sq(&self, other: &Point) -> Result<f64> {
        if self.dim != other.dim {
            return Err(invalid("point", format!("dimension mismatch {} vs {}", self.dim, other.dim)));
        }
        Ok(self.coords().iter().zip(other.coords()).map(|(a, b)| (a - b) * (a - b)).sum())
    }
}

/// `(4πs)^{-d/2} exp(-r²/(4s))` from `c = r²/4`.
#[inline]
pub(crate) fn gauss_c(s: f64, c: f64, d: usize) -> f64 {
    let e = (-c / s).exp();
    if e == 0.0 {
        return 0.0;
    }
    let base = 4.0 * PI * s;
    let pre = match d {
        1 => 1.0 / base.sqrt(),
        2 => 1.0 / base,
        _ => 1.0 / (base * base.sqrt()),
    };
    pre * e
}

/// `g(s,x,y) = (4πs)^{-d/2} exp(-|x-y|²/(4s))`.
pub fn gaussian_g(s: f64, x: &Point, y: &Point) -> Result<f64> {
    if !(s > 0.0) {
        return Err(invalid("s", format!("{s} must be positive")));
    }
    Ok(gauss_c(s, 0.25 * x.distance_sq(y)?, x.dim()))
}

/// `∫_0^∞ g(τu, c) W(u) du` split at `u = M` (so `s = M τ`).
///
/// The left piece is integrated in `v = c/s`, which turns `exp(-c/s)` into
/// `exp(-v)`; for `c = 0` it is integrated in `u` directly. The right piece
/// uses the power-tail map with decay exponent `κ`.
pub(crate) fn subordinated_integral(
    series: &DensitySeries,
    tau: f64,
    c: f64,
    d: usize,
    kappa: f64,
    quad: &QuadratureSpec,
) -> Integral {
    left_piece(series, tau, c, d, quad).combine(right_piece(series, tau, c, d, kappa, quad))
}

/// `∫_0^M g(τu, c) W(u) du`.
pub(crate) fn left_piece(series: &DensitySeries, tau: f64, c: f64, d: usize, quad: &QuadratureSpec) -> Integral {
    let m = quad.split_multiplier;
    let s_min = series.policy().s_min_certified;
    let mut u_marks = vec![s_min / 256.0, s_min / 16.0, s_min, 4.0 * s_min, 0.25, 1.0, 4.0];
    u_marks.retain(|u| *u < m);

    if c == 0.0 {
        let mut pts = vec![0.0];
        pts.extend_from_slice(&u_marks);
        pts.push(m);
        let mut f = |u: f64| {
            let g = gauss_c(tau * u, 0.0, d);
            if g == 0.0 || !g.is_finite() {
                0.0
            } else {
                g * series.eval(u)
            }
        };
        return integrate_with_breaks(&mut f, &pts, quad);
    }
    // Past `v0 + 750` the factor exp(-v) is below exp(-750) of its value
    // at the split, which bounds the neglected part.
    let v0 = c / (tau * m);
    let mut pts = vec![v0];
    pts.extend(u_marks.iter().rev().map(|u| c / (tau * u)));
    let end = (pts[pts.len() - 1] + 60.0).min(v0 + 750.0);
    pts.retain(|v| *v < end);
    pts.push(end);
    let mut f = |v: f64| {
        let u = c / (tau * v);
        let g = gauss_c(tau * u, c, d);
        if g == 0.0 {
            0.0
        } else {
            g * series.eval(u) * c / (tau * v * v)
        }
    };
    integrate_with_breaks(&mut f, &pts, quad)
}

/// `∫_M^∞ g(τu, c) W(u) du` for `W` decaying like `u^{-1-κ+d/2}`.
pub(crate) fn right_piece(
    series: &DensitySeries,
    tau: f64,
    c: f64,
    d: usize,
    kappa: f64,
    quad: &QuadratureSpec,
) -> Integral {
    let m = quad.split_multiplier;
    let peak = 2.0 * c / (d as f64 * tau);
    let mut pts = vec![m];
    for p in [0.25 * peak, peak, 4.0 * peak] {
        if p > m {
            pts.push(p);
        }
    }
    let tail_start = pts[pts.len() - 1];
    let mut f = |u: f64| {
        let g = gauss_c(tau * u, c, d);
        if g == 0.0 {
            0.0
        } else {
            g * series.eval(u)
        }
    };
    let middle = integrate_with_breaks(&mut f, &pts, quad);
    let tail = integrate_power_tail(&mut f, tail_start, kappa, quad);
    middle.combine(tail)
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid("t", format!("{t} must be positive and finite")))
    }
}

fn check_kernel_regime(idx: &StableIndex) -> Result<()> {
    if idx.alpha() > 1.0 {
        return Err(invalid("alpha", format!("kernel evaluation needs α ≤ 1, got {}", idx.alpha())));
    }
    Ok(())
}

/// Transition density evaluator for a fixed index, reusing the series tables.
#[derive(Debug, Clone)]
pub struct TransitionDensity {
    series: DensitySeries,
    quad: QuadratureSpec,
}

impl TransitionDensity {
    pub fn new(idx: &StableIndex, quad: &QuadratureSpec) -> Result<Self> {
        check_kernel_regime(idx)?;
        quad.validate()?;
        Ok(Self { series: DensitySeries::density(idx, &SeriesPolicy::for_index(idx))?, quad: *quad })
    }

    /// `p(t, r)` for `|x - y| = r` in dimension `d`.
    pub fn at_distance(&self, t: f64, r: f64, d: usize) -> Result<f64> {
        check_t(t)?;
        if !(1..=3).contains(&d) {
            return Err(invalid("d", format!("{d} is outside 1..=3")));
        }
        let idx = self.series.index();
        let tau = t.powf(idx.inv());
        let kappa = 0.5 * d as f64 + idx.beta();
        subordinated_integral(&self.series, tau, 0.25 * r * r, d, kappa, &self.quad).require(&self.quad)
    }

    pub fn eval(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        let r2 = x.distance_sq(y)?;
        self.at_distance(t, r2.sqrt(), x.dim())
    }
}

/// `p(t,x,y) = ∫_0^∞ g(s,x,y) f_t(s) ds`.
pub fn transition_density(t: f64, x: &Point, y: &Point, idx: &StableIndex, quad: &QuadratureSpec) -> Result<f64> {
    TransitionDensity::new(idx, quad)?.eval(t, x, y)
}

/// `(1/π) ∫_0^∞ cos(rξ) exp(-t ξ^α) dξ`, the 1D density by Fourier inversion.
///
/// For `r ≠ 0` the integral is cut at the zeros of `cos(rξ)`; the resulting
/// alternating series has completely monotone magnitudes for `α ≤ 1` and is
/// summed with Cohen–Villegas–Zagier acceleration.
pub fn transition_density_fourier_1d(t: f64, r: f64, idx: &StableIndex) -> Result<f64> {
    check_t(t)?;
    check_kernel_regime(idx)?;
    let alpha = idx.alpha();
    let spec = QuadratureSpec::default().with_tolerances(1e-15, 1e-13);
    let r = r.abs();
    if r == 0.0 {
        // ξ = (v/t)^{1/α}
        let inv = 1.0 / alpha;
        let scale = inv * t.powf(-inv);
        let f = |v: f64| (-v).exp() * v.powf(inv - 1.0);
        let pts = [0.0, 1.0, 4.0, 16.0, 64.0, 800.0];
        let mut f = f;
        return integrate_with_breaks(&mut f, &pts, &spec).require(&spec).map(|v| v * scale / PI);
    }
    let f = |xi: f64| (r * xi).cos() * (-t * xi.powf(alpha)).exp();
    let half = PI / r;
    let first_zero = 0.5 * half;
    // Resolve the ξ^α cusp at the origin before the first zero.
    let mut pts = vec![0.0];
    let mut p = first_zero;
    while p > 1e-12 * first_zero {
        pts.push(p);
        p *= 0.125;
    }
    pts.sort_by(f64::total_cmp);
    let mut ff = f;
    let head = integrate_with_breaks(&mut ff, &pts, &spec).require(&spec)?;
    const TERMS: usize = 40;
    let mut mags = Vec::with_capacity(TERMS);
    for k in 0..TERMS {
        let a = first_zero + k as f64 * half;
        let piece = integrate(&mut ff, a, a + half, &spec).require(&spec)?;
        mags.push(piece.abs());
    }
    // The first piece after ξ_0 is negative.
    Ok((head - sum_alternating(&mags)) / PI)
}

/// A function on a uniform 1D grid, linearly interpolated and zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    /// First node.
    pub start: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(start: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || values.len() < 2 {
            return Err(invalid("grid", "need h > 0 and at least two nodes"));
        }
        Ok(Self { start, h, values })
    }

    pub fn end(&self) -> f64 {
        self.start + self.h * (self.values.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + self.h * i as f64
    }

    pub fn value_at(&self, y: f64) -> f64 {
        let s = (y - self.start) / self.h;
        if !(s >= 0.0) || s > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// `a·self + b·other` on the same grid.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        if self.values.len() != other.values.len() || self.start != other.start || self.h != other.h {
            return Err(invalid("grid", "grid functions live on different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(u, v)| a * u + b * v).collect();
        Ok(Self { start: self.start, h: self.h, values })
    }
}

/// `P_t φ(x) = ∫ p(t,x,y) φ(y) dy` for a 1D grid function.
///
/// Every cell gets a fixed Gauss–Legendre panel; cells near `x` are split
/// geometrically down to the kernel width `t^{1/α}`. The nodes do not depend
/// on `φ`, so the map is linear to rounding.
pub fn semigroup_apply(t: f64, phi: &GridFunction, x: f64, idx: &StableIndex, quad: &QuadratureSpec) -> Result<f64> {
    let kernel = TransitionDensity::new(idx, quad)?;
    check_t(t)?;
    let rule = FixedRule::new(8);
    let width = t.powf(1.0 / idx.alpha());
    let mut breaks: Vec<f64> = (0..phi.values.len()).map(|i| phi.node(i)).collect();
    if x > phi.start && x < phi.end() {
        breaks.push(x);
        let mut w = width.min(phi.h);
        while w < phi.end() - phi.start {
            for p in [x - w, x + w] {
                if p > phi.start && p < phi.end() {
                    breaks.push(p);
                }
            }
            w *= 2.0;
        }
        let mut w = width;
        for _ in 0..8 {
            w *= 0.25;
            breaks.push(x - w);
            breaks.push(x + w);
        }
        breaks.retain(|p| *p >= phi.start && *p <= phi.end());
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        for (y, wt) in rule.mapped(w[0], w[1]) {
            let v = phi.value_at(y);
            if v != 0.0 {
                total += wt * v * kernel.at_distance(t, (x - y).abs(), 1)?;
            }
        }
    }
    Ok(total)
}

/// `∫_0^∞ s^{-qα/2-1} g(s,x,y) ds = (4π)^{-d/2} Γ(qα/2 + d/2) (r²/4)^{-qα/2-d/2}`.
pub fn inner_integral(q: u32, d: u32, idx: &StableIndex, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", format!("{r} must be positive (the integral diverges at r = 0)")));
    }
    if d == 0 {
        return Err(invalid("d", "dimension must be positive"));
    }
    let e = f64::from(q) * idx.beta() + 0.5 * f64::from(d);
    let ln = -0.5 * f64::from(d) * (4.0 * PI).ln() + ln_gamma(e) - e * (0.25 * r * r).ln();
    Ok(ln.exp())
}
