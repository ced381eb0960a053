//! Composite Gauss–Legendre quadrature and a brute-force reference for the
//! quantized-Gaussian posterior, used as an independent oracle.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫ f` over `[a, b]` split at the sorted `breaks`, `panels` panels per piece.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], panels: usize, rule: &[(f64, f64)]) -> f64 {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let (lo, half) = (w[0] + p as f64 * h, h / 2.0);
            total += rule.iter().map(|&(x, wt)| wt * f(lo + half * (x + 1.0))).sum::<f64>() * half;
        }
    }
    total
}

/// `ln Q(x)`, finite for all finite `x` (asymptotic series past erfc underflow).
fn log_q(x: f64) -> f64 {
    if x < 37.0 {
        (0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln()
    } else {
        let r = 1.0 / (x * x);
        -0.5 * x * x - (x * (2.0 * PI).sqrt()).ln() + (1.0 - r + 3.0 * r * r - 15.0 * r * r * r).ln()
    }
}

/// `ln(Φ(b) − Φ(a))` for `a < b`, choosing the tail that avoids cancellation.
fn log_cdf_diff(a: f64, b: f64) -> f64 {
    let tail = |lo: f64, hi: f64| {
        // ln(Q(lo) − Q(hi)) for lo ≥ 0
        let (ql, qh) = (log_q(lo), if hi.is_infinite() { f64::NEG_INFINITY } else { log_q(hi) });
        ql + (-(qh - ql).exp()).ln_1p()
    };
    if a >= 0.0 {
        tail(a, b)
    } else if b <= 0.0 {
        tail(-b, -a)
    } else {
        let q = |x: f64| 0.5 * libm::erfc(x * FRAC_1_SQRT_2);
        (1.0 - q(b) - q(-a)).ln()
    }
}

/// Posterior mean and variance of `z ~ N(m, v/2)` given `z + w ∈ (l, u]`,
/// `w ~ N(0, s2/2)`, by direct numerical integration.
pub fn quantized_posterior_quadrature(m: f64, v: f64, s2: f64, l: f64, u: f64) -> (f64, f64) {
    let sp = (v / 2.0).sqrt();
    let sn = (s2 / 2.0).sqrt();
    let logf = |z: f64| -0.5 * ((z - m) / sp).powi(2) + log_cdf_diff((l - z) / sn, (u - z) / sn);

    // The integrand is log-concave: bracket and ternary-search its mode.
    // Finite edges of the cell (an unbounded side borrows the other edge).
    let lf = if l.is_finite() {
        l
    } else if u.is_finite() {
        u
    } else {
        m
    };
    let uf = if u.is_finite() { u } else { lf };
    let lo0 = (m - 60.0 * sp).min(lf - 60.0 * sn);
    let hi0 = (m + 60.0 * sp).max(uf + 60.0 * sn);
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..300 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if logf(a) < logf(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let mode = 0.5 * (lo + hi);
    let peak = logf(mode);

    // Walk outward until the integrand is negligible.
    let reach = |dir: f64| {
        let mut d = sp.min(if sn > 0.0 { sn.max(sp * 1e-6) } else { sp }).max(1e-300);
        while logf(mode + dir * d) > peak - 80.0 && d < 1e300 {
            d *= 2.0;
        }
        mode + dir * d
    };
    let (a, b) = (reach(-1.0), reach(1.0));
    let mut breaks = vec![mode];
    for edge in [l, u].into_iter().filter(|e| e.is_finite()) {
        breaks.extend([edge - 8.0 * sn, edge, edge + 8.0 * sn]);
    }
    let rule = gauss_legendre(20);
    let f = |z: f64| (logf(z) - peak).exp();
    let z0 = integrate(f, a, b, &breaks, 48, &rule);
    let mean = integrate(|z| (z - mode) * f(z), a, b, &breaks, 48, &rule) / z0 + mode;
    let var = integrate(|z| (z - mean).powi(2) * f(z), a, b, &breaks, 48, &rule) / z0;
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let r = gauss_legendre(20);
        assert!((r.iter().map(|w| w.1).sum::<f64>() - 2.0).abs() < 1e-14);
        let v = integrate(|x| x.powi(38), -1.0, 1.0, &[], 1, &r);
        assert!((v - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_limit() {
        // Uninformative observation: posterior equals the prior.
        let (m, v) = quantized_posterior_quadrature(0.4, 0.6, 1.0, f64::NEG_INFINITY, f64::INFINITY);
        assert!((m - 0.4).abs() < 1e-12 && (v - 0.3).abs() < 1e-12);
        // Sign observation, no noise: half-normal.
        let (m, v) = quantized_posterior_quadrature(0.0, 1.0, 1e-30, 0.0, f64::INFINITY);
        assert!((m - 0.564_189_583_547_756).abs() < 1e-10, "{m}");
        assert!((v - 0.181_690_113_816_209).abs() < 1e-10, "{v}");
    }
}
