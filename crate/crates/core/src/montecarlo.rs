//! First exit of the killed stable process from an interval, simulated as
//! Brownian motion run on a stable clock, and the decay rate of survival.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficients::StableIndex;
use crate::error::{invalid, Error, Result};
use crate::subordinator::sample_subordinator_increment;

/// Time change driving the Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    /// One-sided `α/2`-stable subordinator.
    Stable(StableIndex),
    /// `σ(t) = t`: plain Brownian motion with generator `Δ`.
    Brownian,
}

/// Starting point of each path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    Fixed(f64),
    Midpoint,
    /// Uniform on the interval, drawn from the path's own stream.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    /// Paths alive at `t_max` are censored.
    pub t_max: f64,
    pub seed: u64,
    /// Survival is recorded every `stride` steps.
    pub stride: usize,
    pub start: Start,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, dt: 1e-3, t_max: 10.0, seed: 0, stride: 50, start: Start::Midpoint }
    }
}

impl McConfig {
    pub fn validate(&self, interval: [f64; 2]) -> Result<()> {
        let [a, b] = interval;
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(invalid("interval", format!("({a}, {b}) is not a bounded interval")));
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            return Err(invalid("dt", format!("{} must lie in (0, 1e-2]", self.dt)));
        }
        if !(self.t_max > self.dt && self.t_max.is_finite()) {
            return Err(invalid("t_max", "must exceed dt and be finite"));
        }
        if self.stride == 0 {
            return Err(invalid("stride", "must be positive"));
        }
        if let Start::Fixed(x) = self.start {
            if !(x > a && x < b) {
                return Err(invalid("x0", format!("{x} is not inside ({a}, {b})")));
            }
        }
        Ok(())
    }

    fn steps(&self) -> u64 {
        (self.t_max / self.dt).round() as u64
    }
}

/// Number of steps until the path first sits outside `(a, b)` at a
/// monitoring time, or `None` if it survives `max_steps`.
pub fn simulate_exit<R: Rng + ?Sized>(
    x0: f64,
    interval: [f64; 2],
    dt: f64,
    max_steps: u64,
    clock: &Clock,
    rng: &mut R,
) -> Option<u64> {
    let [a, b] = interval;
    let mut x = x0;
    let brownian_sd = (2.0 * dt).sqrt();
    for step in 1..=max_steps {
        let sd = match clock {
            Clock::Stable(idx) => (2.0 * sample_subordinator_increment(dt, idx, rng)).sqrt(),
            Clock::Brownian => brownian_sd,
        };
        let z: f64 = StandardNormal.sample(rng);
        x += sd * z;
        if !(x > a && x < b) {
            return Some(step);
        }
    }
    None
}

/// Empirical `P(τ_D > t)` on a regular grid starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub t_grid: Vec<f64>,
    pub survival: Vec<f64>,
    /// `√(p(1-p)/n_paths)`.
    pub standard_errors: Vec<f64>,
    pub n_paths: usize,
    pub dt: f64,
}

impl SurvivalCurve {
    fn from_counts(alive: &[u64], n_paths: usize, record_dt: f64, dt: f64) -> Self {
        let n = n_paths as f64;
        let survival: Vec<f64> = alive.iter().map(|c| *c as f64 / n).collect();
        let standard_errors = survival.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
        let t_grid = (0..alive.len()).map(|k| k as f64 * record_dt).collect();
        Self { t_grid, survival, standard_errors, n_paths, dt }
    }
}

/// Runs `config.n_paths` independent paths; path `i` uses its own ChaCha8
/// stream `i` under `config.seed`, so results do not depend on scheduling.
pub fn survival_curve(interval: [f64; 2], clock: &Clock, config: &McConfig) -> Result<SurvivalCurve> {
    config.validate(interval)?;
    let [a, b] = interval;
    let max_steps = config.steps();
    let stride = config.stride as u64;
    let bins = (max_steps / stride) as usize + 1;
    // exits[k] = paths whose last recorded survival is at bin k - 1.
    let mut exits = vec![0u64; bins + 1];
    let mut censored = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for path in 0..config.n_paths {
        rng.set_stream(path as u64);
        rng.set_word_pos(0);
        let x0 = match config.start {
            Start::Fixed(x) => x,
            Start::Midpoint => 0.5 * (a + b),
            Start::Uniform => a + (b - a) * rng.random::<f64>(),
        };
        match simulate_exit(x0, interval, config.dt, max_steps, clock, &mut rng) {
            // Alive at bin k iff n > k·stride.
            Some(n) => exits[((n - 1) / stride) as usize + 1] += 1,
            None => censored += 1,
        }
    }
    let mut alive = Vec::with_capacity(bins);
    let mut remaining = config.n_paths as u64;
    for e in &exits[..bins] {
        remaining -= e;
        alive.push(remaining);
    }
    debug_assert!(alive[bins - 1] >= censored);
    Ok(SurvivalCurve::from_counts(&alive, config.n_paths, stride as f64 * config.dt, config.dt))
}

/// Decay-rate estimate from the survival tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lambda_hat: f64,
    pub stderr: f64,
    pub window: [f64; 2],
    pub r_squared: f64,
    pub points: usize,
}

/// Controls for the window search in [`estimate_lambda1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    pub min_r_squared: f64,
    pub min_points: usize,
    /// Points with fewer surviving paths are dropped.
    pub min_alive: f64,
    /// Windows start once survival has dropped to this level, past the
    /// transient from the initial distribution.
    pub max_start_survival: f64,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        Self { min_r_squared: 0.999, min_points: 8, min_alive: 200.0, max_start_survival: 0.5 }
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    w: f64,
    wx: f64,
    wy: f64,
    wxx: f64,
    wxy: f64,
    wyy: f64,
}

impl Moments {
    fn add(&mut self, x: f64, y: f64, w: f64) {
        self.w += w;
        self.wx += w * x;
        self.wy += w * y;
        self.wxx += w * x * x;
        self.wxy += w * x * y;
        self.wyy += w * y * y;
    }

    fn sub(&self, o: &Moments) -> Moments {
        Moments {
            w: self.w - o.w,
            wx: self.wx - o.wx,
            wy: self.wy - o.wy,
            wxx: self.wxx - o.wxx,
            wxy: self.wxy - o.wxy,
            wyy: self.wyy - o.wyy,
        }
    }

    /// Slope, R², residual sum of squares and weighted `Sxx`.
    fn fit(&self) -> (f64, f64, f64, f64) {
        let sxx = self.wxx - self.wx * self.wx / self.w;
        let sxy = self.wxy - self.wx * self.wy / self.w;
        let syy = self.wyy - self.wy * self.wy / self.w;
        let slope = sxy / sxx;
        let rss = (syy - slope * sxy).max(0.0);
        let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 0.0 };
        (slope, r2, rss, sxx)
    }
}

/// Weighted least-squares slope of `-ln S(t)` over the longest window with
/// `R² ≥ policy.min_r_squared`. Weights are `n S / (1 - S)`, the inverse
/// delta-method variance of `ln S`.
pub fn estimate_lambda1(curve: &SurvivalCurve, policy: &WindowPolicy) -> Result<LambdaEstimate> {
    let n = curve.n_paths as f64;
    let usable: Vec<(f64, f64, f64)> = curve
        .t_grid
        .iter()
        .zip(&curve.survival)
        .filter(|(_, s)| **s * n >= policy.min_alive && **s < 1.0)
        .map(|(t, s)| (*t, -s.ln(), n * s / (1.0 - s)))
        .collect();
    let start_limit = curve.survival.iter().position(|s| *s <= policy.max_start_survival);
    let Some(first_t) = start_limit.map(|i| curve.t_grid[i]) else {
        return Err(Error::InsufficientData("survival never drops to the tail level".into()));
    };
    let pts: Vec<_> = usable.into_iter().filter(|p| p.0 >= first_t).collect();
    if pts.len() < policy.min_points.max(3) {
        return Err(Error::InsufficientData(format!("{} tail points, need {}", pts.len(), policy.min_points.max(3))));
    }
    let mut prefix = vec![Moments::default(); pts.len() + 1];
    for (i, &(t, y, w)) in pts.iter().enumerate() {
        let mut m = prefix[i];
        m.add(t, y, w);
        prefix[i + 1] = m;
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..pts.len() {
        for j in (i + policy.min_points.max(3) - 1)..pts.len() {
            let span = pts[j].0 - pts[i].0;
            if best.is_some_and(|(s, _, _)| span <= s) {
                continue;
            }
            let (_, r2, _, _) = prefix[j + 1].sub(&prefix[i]).fit();
            if r2 >= policy.min_r_squared {
                best = Some((span, i, j));
            }
        }
    }
    let Some((_, i, j)) = best else {
        return Err(Error::InsufficientData(format!("no window reaches R² ≥ {}", policy.min_r_squared)));
    };
    let (slope, r2, rss, sxx) = prefix[j + 1].sub(&prefix[i]).fit();
    let k = (j - i + 1) as f64;
    let scale = (rss / (k - 2.0)).max(1.0);
    Ok(LambdaEstimate {
        lambda_hat: slope,
        stderr: (scale / sxx).sqrt(),
        window: [pts[i].0, pts[j].0],
        r_squared: r2,
        points: j - i + 1,
    })
}
