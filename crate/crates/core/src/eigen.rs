//! Ground state of the Dirichlet fractional Laplacian on an interval by
//! fractional centred differences and inverse iteration.
//!
//! The matrix is `h^{-α} T` with `T` the symmetric Toeplitz matrix of the
//! weights `w_j`, whose symbol is `|2 sin(θ/2)|^α`. All work is done on `T`
//! and the eigenvalue is rescaled at the end, so the `r^{-α}` interval scaling
//! holds up to the rounding in that single multiplication.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficients::StableIndex;
use crate::error::{invalid, Error, Result};
use crate::extrapolate::{richardson, Extrapolated};
use crate::special::gamma;

/// Uniform grid on `(a, b)` with `n` interior nodes `x_i = a + i h`, `i = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid1D {
    pub const MIN_NODES: usize = 15;

    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(invalid("interval", format!("need a < b, got ({a}, {b})")));
        }
        if n < Self::MIN_NODES {
            return Err(invalid("n", format!("{n} interior nodes, need at least {}", Self::MIN_NODES)));
        }
        Ok(Self { a, b, n, h: (b - a) / (n + 1) as f64 })
    }

    /// Interior node `i` in `1..=n`.
    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.node(i)).collect()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

/// Symmetric Toeplitz discretisation of `(-Δ)^{α/2}` with zero exterior data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteFracLap {
    pub grid: Grid1D,
    pub alpha: f64,
    /// `w_0, ..., w_n`; the operator is `h^{-α} Σ_j w_{|i-j|} u_j`.
    pub weights: Vec<f64>,
}

/// Fractional centred-difference weights `w_0 = Γ(α+1)/Γ(α/2+1)²`,
/// `w_{j+1} = w_j (j - α/2)/(j + 1 + α/2)`.
pub fn fractional_weights(alpha: f64, count: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(count);
    if count == 0 {
        return w;
    }
    let g = gamma(0.5 * alpha + 1.0);
    w.push(gamma(alpha + 1.0) / (g * g));
    for j in 0..count - 1 {
        let jf = j as f64;
        let next = w[j] * (jf - 0.5 * alpha) / (jf + 1.0 + 0.5 * alpha);
        w.push(next);
    }
    w
}

impl DiscreteFracLap {
    /// Accepts `α ∈ (0, 2]`; `α = 2` gives the three-point Laplacian.
    pub fn new(grid: Grid1D, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 2]")));
        }
        Ok(Self { grid, alpha, weights: fractional_weights(alpha, grid.n + 1) })
    }

    /// `h^{-α}`.
    pub fn scale(&self) -> f64 {
        self.grid.h.powf(-self.alpha)
    }

    /// `Σ_j w_{|j|} e^{ijθ}`, truncated at the stored weights.
    pub fn symbol(&self, theta: f64) -> f64 {
        let mut s = self.weights[0];
        for (j, w) in self.weights.iter().enumerate().skip(1) {
            s += 2.0 * w * (j as f64 * theta).cos();
        }
        s
    }

    /// `L u`, including the `h^{-α}` factor.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let scale = self.scale();
        toeplitz_apply(&self.weights, u).into_iter().map(|v| v * scale).collect()
    }
}

/// Assembles the operator for a stable index.
pub fn assemble(grid: Grid1D, idx: &StableIndex) -> Result<DiscreteFracLap> {
    DiscreteFracLap::new(grid, idx.alpha())
}

fn toeplitz_apply(w: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for (j, uj) in u.iter().enumerate() {
                s += w[i.abs_diff(j)] * uj;
            }
            s
        })
        .collect()
}

/// Dense lower Cholesky factor, row-major.
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn toeplitz(w: &[f64], n: usize) -> Result<Self> {
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let (row_i, row_j) = if i == j {
                    let r = &l[i * n..i * n + j];
                    (r, r)
                } else {
                    let (head, tail) = l.split_at(i * n);
                    (&tail[..j], &head[j * n..j * n + j])
                };
                let dot: f64 = row_i.iter().zip(row_j).map(|(a, b)| a * b).sum();
                let s = w[i - j] - dot;
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let dot: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - dot) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// `(λ₁, φ₁)` on a grid, `φ₁ > 0` and `h Σ φ₁² = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub grid: Grid1D,
    pub alpha: f64,
    pub lambda1: f64,
    pub phi1: Vec<f64>,
    /// Observed convergence order under refinement, when known.
    pub order_estimate: Option<f64>,
    /// `‖Lφ - λφ‖_h / λ`.
    pub residual: f64,
    pub iterations: usize,
}

impl EigenPair {
    /// `φ₁` with the boundary zeros, on nodes `a, a+h, ..., b`.
    pub fn with_boundary(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.phi1.len() + 2);
        v.push(0.0);
        v.extend_from_slice(&self.phi1);
        v.push(0.0);
        v
    }

    /// `h^{-2}(φ_{i+1} - 2φ_i + φ_{i-1})` at interior node `i ∈ 1..=n`.
    pub fn second_difference(&self, i: usize) -> f64 {
        let v = |k: usize| if k == 0 || k > self.grid.n { 0.0 } else { self.phi1[k - 1] };
        (v(i + 1) - 2.0 * v(i) + v(i - 1)) / (self.grid.h * self.grid.h)
    }
}

/// Stopping floor for the relative residual, on top of the Rayleigh test.
const RESIDUAL_TARGET: f64 = 1e-9;
const MAX_ITERATIONS: usize = 1000;

/// Inverse iteration with a dense Cholesky factorisation.
pub fn smallest_eigenpair(op: &DiscreteFracLap, tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(invalid("tol", format!("{tol} is outside (0, 1e-6]")));
    }
    let n = op.grid.n;
    let w = &op.weights;
    let chol = Cholesky::toeplitz(w, n)?;
    let mut v = vec![1.0; n];
    normalise(&mut v);
    let mut rayleigh = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let mut y = chol.solve(&v);
        normalise(&mut y);
        let ty = toeplitz_apply(w, &y);
        let next: f64 = ty.iter().zip(&y).map(|(a, b)| a * b).sum();
        let r2: f64 = ty.iter().zip(&y).map(|(a, b)| (a - next * b) * (a - next * b)).sum();
        residual = r2.sqrt() / next;
        let change = (next - rayleigh).abs();
        rayleigh = next;
        v = y;
        if change < tol * rayleigh && residual < RESIDUAL_TARGET {
            return Ok(finish(op, v, rayleigh, residual, it));
        }
    }
    Err(Error::NotConverged { iterations: MAX_ITERATIONS, residual })
}

fn normalise(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    for x in v.iter_mut() {
        *x *= sign / norm;
    }
}

fn finish(op: &DiscreteFracLap, mut v: Vec<f64>, mu: f64, residual: f64, iterations: usize) -> EigenPair {
    let h = op.grid.h;
    let scale = 1.0 / h.sqrt();
    for x in v.iter_mut() {
        *x *= scale;
    }
    EigenPair {
        grid: op.grid,
        alpha: op.alpha,
        lambda1: mu * op.scale(),
        phi1: v,
        order_estimate: None,
        residual,
        iterations,
    }
}

/// Eigenvalues on three grids and their fitted-order extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub n_sequence: Vec<usize>,
    pub lambda_per_grid: Vec<f64>,
    pub extrapolated: Extrapolated,
}

/// Solves on `(a, b)` for each `n` (increasing) and extrapolates from the
/// last three grids.
pub fn refine_extrapolate(a: f64, b: f64, ns: &[usize], alpha: f64, tol: f64) -> Result<Refinement> {
    if ns.len() < 3 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_sequence", "need at least three increasing grid sizes"));
    }
    let mut lambdas = Vec::with_capacity(ns.len());
    let mut hs = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = Grid1D::new(a, b, n)?;
        let pair = smallest_eigenpair(&DiscreteFracLap::new(grid, alpha)?, tol)?;
        lambdas.push(pair.lambda1);
        hs.push(grid.h);
    }
    let k = ns.len() - 3;
    let extrapolated = richardson([hs[k], hs[k + 1], hs[k + 2]], [lambdas[k], lambdas[k + 1], lambdas[k + 2]]);
    Ok(Refinement { n_sequence: ns.to_vec(), lambda_per_grid: lambdas, extrapolated })
}
