//! Richardson extrapolation with a fitted order.

use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

/// Limit estimate from three samples of `v(h) ≈ v* + C h^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub value: f64,
    /// Fitted `p`; `None` when the samples do not fit the model.
    pub order: Option<f64>,
    /// Set when the samples are not monotone or the order could not be fitted;
    /// `value` is then the finest sample.
    pub warning: bool,
}

const MIN_ORDER: f64 = 0.02;
const MAX_ORDER: f64 = 12.0;

/// Fits `p` from `(v1-v2)/(v2-v3) = (h1^p - h2^p)/(h2^p - h3^p)` by bisection
/// and eliminates the leading error term. Samples must be ordered with
/// `h1 > h2 > h3 > 0`.
pub fn richardson(h: [f64; 3], v: [f64; 3]) -> Extrapolated {
    let fallback = Extrapolated { value: v[2], order: None, warning: true };
    if !(h[0] > h[1] && h[1] > h[2] && h[2] > 0.0) {
        return fallback;
    }
    let d1 = v[0] - v[1];
    let d2 = v[1] - v[2];
    if d2 == 0.0 && d1 == 0.0 {
        return Extrapolated { value: v[2], order: None, warning: false };
    }
    if d1 * d2 <= 0.0 {
        return fallback;
    }
    let target = d1 / d2;
    let ratio = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p));
    let (mut lo, mut hi) = (MIN_ORDER, MAX_ORDER);
    if target < ratio(lo) || target > ratio(hi) {
        return fallback;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let p = 0.5 * (lo + hi);
    let h2p = h[1].powf(p);
    let h3p = h[2].powf(p);
    Extrapolated { value: v[2] - d2 * h3p / (h2p - h3p), order: Some(p), warning: false }
}
