//! Receiver front end: mid-rise uniform quantizer, power accumulator, noise
//! estimation and correlation-based timing search.

use std::f64::consts::PI;
use std::ops::Range;

use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::numerics::{normal_cdf, normal_pdf, Complex64, ZERO};

/// MSE-minimizing step sizes for unit-variance Gaussian input, B = 1..=5.
pub fn delta_b(bits: u32) -> Option<f64> {
    match bits {
        1 => Some((8.0 / PI).sqrt()),
        2 => Some(0.9957),
        3 => Some(0.5860),
        4 => Some(0.3352),
        5 => Some(0.1881),
        _ => None,
    }
}

/// Quantization MSE of a unit-variance Gaussian at the step sizes of [`delta_b`].
pub fn gaussian_distortion(bits: u32) -> Option<f64> {
    match bits {
        1 => Some(0.363_380_227_6),
        2 => Some(0.118_846_050_5),
        3 => Some(0.037_439_659_6),
        4 => Some(0.011_542_884_4),
        5 => Some(0.003_495_212_8),
        _ => None,
    }
}

/// Exact MSE of a `bits`-bit mid-rise quantizer with step `delta` on a
/// unit-variance Gaussian, summed in closed form over the cells.
pub fn gaussian_mse(bits: u32, delta: f64) -> Result<f64> {
    let q = QuantizerSpec::with_step(bits, delta)?;
    let (t, lv) = (q.thresholds(), q.levels());
    let mut mse = 0.0;
    for (b, &c) in lv.iter().enumerate() {
        let (a, e) = (t[b], t[b + 1]);
        let (pa, pe) = (normal_pdf(a), normal_pdf(e));
        let mass = normal_cdf(e) - normal_cdf(a);
        // ∫(y − c)²φ = (1 + c²)·mass + (a − 2c)·φ(a) − (e − 2c)·φ(e)
        let ta = if a.is_finite() { (a - 2.0 * c) * pa } else { 0.0 };
        let te = if e.is_finite() { (e - 2.0 * c) * pe } else { 0.0 };
        mse += (1.0 + c * c) * mass + ta - te;
    }
    Ok(mse)
}

/// Step size minimizing [`gaussian_mse`] (golden-section search) and its MSE.
pub fn optimal_step(bits: u32) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-3, 4.0);
    for _ in 0..200 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if gaussian_mse(bits, x1)? < gaussian_mse(bits, x2)? {
            b = x2;
        } else {
            a = x1;
        }
    }
    let d = 0.5 * (a + b);
    Ok((d, gaussian_mse(bits, d)?))
}

/// `B`-bit uniform mid-rise quantizer acting on one real dimension.
///
/// Cells are half-open, `(r_{b-1}, r_b]`, so an input exactly on a threshold
/// maps to the lower cell.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec {
    bits: u32,
    delta: f64,
    thresholds: Vec<f64>,
    levels: Vec<f64>,
}

impl QuantizerSpec {
    /// Quantizer with an explicit step size.
    pub fn with_step(bits: u32, delta: f64) -> Result<Self> {
        if !(1..=5).contains(&bits) {
            return Err(invalid(format!("quantizer precision must be 1..=5 bits, got {bits}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("step size must be positive, got {delta}")));
        }
        let cells = 1usize << bits;
        let half = (cells / 2) as f64;
        let mut thresholds = Vec::with_capacity(cells + 1);
        thresholds.push(f64::NEG_INFINITY);
        thresholds.extend((1..cells).map(|b| (b as f64 - half) * delta));
        thresholds.push(f64::INFINITY);
        let levels = (1..=cells).map(|b| (b as f64 - (cells as f64 + 1.0) / 2.0) * delta).collect();
        Ok(Self { bits, delta, thresholds, levels })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `r_0 .. r_{2^B}` including the infinite end points.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Zero-based cell index of a real input.
    #[inline]
    pub fn cell(&self, y: f64) -> usize {
        let last = self.levels.len() - 1;
        let half = (self.levels.len() / 2) as f64;
        let guess = ((y / self.delta).ceil() + half - 1.0).clamp(0.0, last as f64) as usize;
        // Correct the floating-point guess against the exact thresholds.
        let mut idx = guess;
        while idx > 0 && y <= self.thresholds[idx] {
            idx -= 1;
        }
        while idx < last && y > self.thresholds[idx + 1] {
            idx += 1;
        }
        idx
    }

    #[inline]
    pub fn quantize_real(&self, y: f64) -> f64 {
        self.levels[self.cell(y)]
    }

    /// Cell index of an output level.
    pub fn level_index(&self, level: f64) -> Result<usize> {
        let pos = level / self.delta + (self.levels.len() as f64 - 1.0) / 2.0;
        let idx = pos.round();
        if idx < 0.0 || idx >= self.levels.len() as f64 || (pos - idx).abs() > 1e-6 {
            return Err(invalid(format!("{level} is not an output level of this quantizer")));
        }
        Ok(idx as usize)
    }

    /// Cell bounds `(l, u)` of an output level.
    pub fn bounds(&self, level: f64) -> Result<(f64, f64)> {
        let b = self.level_index(level)?;
        Ok((self.thresholds[b], self.thresholds[b + 1]))
    }

    /// Expected per-dimension squared error for a zero-mean Gaussian input
    /// whose per-dimension variance matches the design variance.
    pub fn design_distortion(&self, per_dim_power: f64) -> f64 {
        gaussian_distortion(self.bits).unwrap_or(0.0) * per_dim_power
    }
}

/// Quantizer for per-dimension input power `p_q`: `Δ = √p_q · Δ_B`.
pub fn make_quantizer(bits: u32, p_q: f64) -> Result<QuantizerSpec> {
    let db = delta_b(bits).ok_or_else(|| invalid(format!("unsupported quantizer precision {bits}")))?;
    if !(p_q > 0.0) {
        return Err(invalid(format!("quantizer input power must be positive, got {p_q}")));
    }
    QuantizerSpec::with_step(bits, p_q.sqrt() * db)
}

/// Quantizes real and imaginary parts independently.
pub fn quantize_complex(y: &[Complex64], q: &QuantizerSpec) -> Result<Vec<Complex64>> {
    if let Some(bad) = y.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(invalid(format!("non-finite quantizer input {bad}")));
    }
    Ok(y.iter().map(|v| Complex64::new(q.quantize_real(v.re), q.quantize_real(v.im))).collect())
}

/// Measurements of the high-resolution assistant path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReport {
    /// Average received power.
    pub p_r: f64,
    /// Estimated noise power.
    pub sigma2_hat: f64,
    /// AGC gain, `1/p_r`.
    pub g_agc: f64,
}

impl PowerReport {
    pub fn new(p_r: f64, sigma2_hat: f64) -> Result<Self> {
        if !(p_r > 0.0 && p_r.is_finite()) {
            return Err(invalid(format!("received power must be positive, got {p_r}")));
        }
        Ok(Self { p_r, sigma2_hat, g_agc: 1.0 / p_r })
    }

    /// Per-dimension quantizer input power `g_agc·P_r/2`.
    pub fn quantizer_power(&self) -> f64 {
        self.g_agc * self.p_r / 2.0
    }
}

/// Decimation factor of the high-resolution assistant ADC.
pub const ASSIST_DECIMATION: usize = 64;

/// Mean power `(1/n)Σ|y_i|²`.
pub fn accumulate_power(samples: &[Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("power accumulator needs at least one sample"));
    }
    Ok(samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / samples.len() as f64)
}

/// Mean power of every `factor`-th sample, as seen by the low-rate assistant ADC.
pub fn accumulate_power_decimated(samples: &[Complex64], factor: usize) -> Result<f64> {
    let sub: Vec<Complex64> = samples.iter().step_by(factor.max(1)).copied().collect();
    accumulate_power(&sub)
}

/// Noise power from samples of null (zero-transmit) symbols.
pub fn estimate_noise_power(null_samples: &[Complex64]) -> Result<f64> {
    if null_samples.is_empty() {
        return Err(invalid("no null-symbol samples available for noise estimation"));
    }
    accumulate_power(null_samples)
}

fn check_search(stream: &[Complex64], t_r: &[Complex64], offsets: &Range<usize>) -> Result<()> {
    let n = t_r.len();
    if n == 0 || offsets.is_empty() {
        return Err(invalid("empty synchronization reference or search window"));
    }
    let need = offsets.end - 1 + n;
    if stream.len() < need {
        return Err(Error::InvalidArgument(format!("search window needs {need} samples, stream has {}", stream.len())));
    }
    Ok(())
}

/// Correlation magnitudes `|q_r(o)^H t_r|` for every offset `o` in `offsets`.
pub fn correlate(stream: &[Complex64], t_r: &[Complex64], offsets: Range<usize>) -> Result<Vec<f64>> {
    check_search(stream, t_r, &offsets)?;
    let n = t_r.len();
    let w = offsets.len();
    let span = w + n - 1;
    let m = span.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut a = vec![ZERO; m];
    a[..span].copy_from_slice(&stream[offsets.start..offsets.start + span]);
    let mut b = vec![ZERO; m];
    b[..n].copy_from_slice(t_r);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    inv.process(&mut a);
    let scale = 1.0 / m as f64;
    Ok(a[..w].iter().map(|c| c.norm() * scale).collect())
}

/// Offset in `offsets` maximizing `|q_r(o)^H t_r|`.
pub fn sync_search(stream: &[Complex64], t_r: &[Complex64], offsets: Range<usize>) -> Result<usize> {
    let start = offsets.start;
    let corr = correlate(stream, t_r, offsets)?;
    let (best, _) =
        corr.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
    Ok(start + best)
}

/// Direct O(W·N) evaluation of [`sync_search`].
pub fn sync_search_direct(stream: &[Complex64], t_r: &[Complex64], offsets: Range<usize>) -> Result<usize> {
    check_search(stream, t_r, &offsets)?;
    let mut best = (offsets.start, f64::NEG_INFINITY);
    for o in offsets {
        let c: Complex64 = stream[o..o + t_r.len()].iter().zip(t_r).map(|(q, t)| q.conj() * t).sum();
        if c.norm() > best.1 {
            best = (o, c.norm());
        }
    }
    Ok(best.0)
}
