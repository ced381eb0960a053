//! Moment ratios of the interval-truncated standard Gaussian.
//!
//! For bounds `eta1 > eta2` the kernel returns
//!
//! ```text
//! ratio_m = (φ(η1) − φ(η2)) / (Φ(η1) − Φ(η2))
//! ratio_v = (η1·φ(η1) − η2·φ(η2)) / (Φ(η1) − Φ(η2))
//! ```
//!
//! Both ratios are evaluated without forming `Φ(η1) − Φ(η2)` whenever the
//! interval sits entirely in one tail: the densities are factored out and the
//! remaining terms are Mills ratios `Q(x)/φ(x)`, which stay O(1/x) for large x.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, Result};

/// Above this argument the Mills ratio is taken from its continued fraction.
pub const MILLS_SWITCH: f64 = 6.0;

/// Intervals narrower than this use a second-order expansion about the midpoint.
const NARROW: f64 = 1e-5;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Upper tail `Q(x) = 1 − Φ(x)`.
#[inline]
pub fn normal_q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    normal_q(-x)
}

/// Mills ratio `Q(x)/φ(x)` for `x >= 0`.
pub fn mills_ratio(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x.is_infinite() {
        return 0.0;
    }
    if x < MILLS_SWITCH {
        return normal_q(x) / normal_pdf(x);
    }
    // Laplace continued fraction: 1/(x + 1/(x + 2/(x + 3/(x + ...)))).
    let mut tail = 0.0;
    for k in (1..=60).rev() {
        tail = k as f64 / (x + tail);
    }
    1.0 / (x + tail)
}

/// Truncated-Gaussian moment ratios for the interval `(eta2, eta1)`.
///
/// `eta2` may be `-inf` and `eta1` may be `+inf`.
pub fn truncated_gaussian_moments(eta1: f64, eta2: f64) -> Result<(f64, f64)> {
    if eta1.is_nan() || eta2.is_nan() || eta1 <= eta2 {
        return Err(invalid(format!("truncation bounds must satisfy eta1 > eta2, got ({eta1}, {eta2})")));
    }
    Ok(moments_unchecked(eta1, eta2))
}

#[inline]
pub(crate) fn moments_unchecked(a: f64, b: f64) -> (f64, f64) {
    let d = a - b;
    if d < NARROW {
        let m = 0.5 * (a + b);
        let d2 = d * d;
        return (-m + m * d2 / 12.0, (1.0 - m * m) + d2 * (2.0 * m * m - 1.0) / 12.0);
    }
    if b >= 0.0 {
        // Right tail: factor out φ(b).
        let r = density_ratio(a, b);
        let ar = if a.is_infinite() { 0.0 } else { a * r };
        let z = mills_ratio(b) - r * mills_ratio(a);
        ((r - 1.0) / z, (ar - b) / z)
    } else if a <= 0.0 {
        // Left tail: mirror of the above, factor out φ(a).
        let s = density_ratio(-b, -a);
        let bs = if b.is_infinite() { 0.0 } else { b * s };
        let z = mills_ratio(-a) - s * mills_ratio(-b);
        ((1.0 - s) / z, (a - bs) / z)
    } else {
        let z = 1.0 - normal_q(a) - normal_q(-b);
        let pa = normal_pdf(a);
        let pb = normal_pdf(b);
        let ta = if a.is_infinite() { 0.0 } else { a * pa };
        let tb = if b.is_infinite() { 0.0 } else { b * pb };
        ((pa - pb) / z, (ta - tb) / z)
    }
}

/// `φ(hi)/φ(lo)` for `hi > lo >= 0`.
#[inline]
fn density_ratio(hi: f64, lo: f64) -> f64 {
    if hi.is_infinite() {
        0.0
    } else {
        (-0.5 * (hi - lo) * (hi + lo)).exp()
    }
}
