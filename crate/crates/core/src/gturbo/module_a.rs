use crate::error::{check_len, invalid, Result};
use crate::frontend::QuantizerSpec;
use crate::numerics::{moments_unchecked, Complex64, Dft};

/// Lower extrinsic variance bound; also the default termination floor.
pub const V_MIN: f64 = 1e-13;
/// Upper extrinsic variance bound.
pub const V_MAX: f64 = 1e6;

/// Counts of numerically forced variance corrections.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClampCounters {
    /// Extrinsic variance fell below [`V_MIN`].
    pub low: u32,
    /// Extrinsic variance exceeded [`V_MAX`], or was non-positive because the
    /// posterior variance did not shrink (no information gained).
    pub high: u32,
    /// Initial prior variance was non-positive (noise overestimate).
    pub init: u32,
}

impl ClampCounters {
    pub fn total(&self) -> u32 {
        self.low + self.high + self.init
    }

    pub fn merge(&mut self, other: &ClampCounters) {
        self.low += other.low;
        self.high += other.high;
        self.init += other.init;
    }
}

/// `(1/v_post − 1/v_pri)^{-1}` clamped to `[V_MIN, V_MAX]`.
pub fn extrinsic_variance(v_post: f64, v_pri: f64, clamps: &mut ClampCounters) -> f64 {
    let v = 1.0 / (1.0 / v_post - 1.0 / v_pri);
    if v.is_nan() || !(0.0..=V_MAX).contains(&v) {
        clamps.high += 1;
        V_MAX
    } else if v < V_MIN {
        clamps.low += 1;
        V_MIN
    } else {
        v
    }
}

/// Time-domain observation seen by Module A.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// Quantizer output with the cell bounds of each real and imaginary part.
    Quantized { q: Vec<Complex64>, re: Vec<(f64, f64)>, im: Vec<(f64, f64)> },
    /// Unquantized samples `z + w`, used for the full-resolution reference.
    Gaussian(Vec<Complex64>),
}

impl Observation {
    pub fn quantized(q: Vec<Complex64>, quantizer: &QuantizerSpec) -> Result<Self> {
        let re = q.iter().map(|v| quantizer.bounds(v.re)).collect::<Result<Vec<_>>>()?;
        let im = q.iter().map(|v| quantizer.bounds(v.im)).collect::<Result<Vec<_>>>()?;
        Ok(Observation::Quantized { q, re, im })
    }

    pub fn gaussian(y: Vec<Complex64>) -> Self {
        Observation::Gaussian(y)
    }

    pub fn len(&self) -> usize {
        self.samples().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Raw samples (quantizer levels or unquantized values).
    pub fn samples(&self) -> &[Complex64] {
        match self {
            Observation::Quantized { q, .. } => q,
            Observation::Gaussian(y) => y,
        }
    }
}

/// Posterior mean and variance of one real dimension with prior
/// `N(m, v/2)`, noise `N(0, s2/2)` and observation cell `(l, u]`.
#[inline]
pub fn scalar_posterior(m: f64, v: f64, s2: f64, l: f64, u: f64) -> (f64, f64) {
    let scale = ((v + s2) / 2.0).sqrt();
    let eta1 = (m - l) / scale;
    let eta2 = (m - u) / scale;
    let (rm, rv) = moments_unchecked(eta1, eta2);
    let mean = m + v / (2.0 * scale) * rm;
    let var = v / 2.0 - v * v / (2.0 * (v + s2)) * (rm * rm + rv);
    (mean, var.max(0.0))
}

/// Output of one Module A pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleAOutput {
    pub z_post: Vec<Complex64>,
    /// Per-entry posterior variance (sum of both real dimensions).
    pub v_post: Vec<f64>,
    pub v_post_avg: f64,
    /// Extrinsic mean in the frequency domain, all N entries.
    pub x_ext: Vec<Complex64>,
    pub v_ext: f64,
}

/// Quantization-aware posterior of `z` followed by the extrinsic update.
pub fn module_a(
    obs: &Observation,
    z_pri: &[Complex64],
    v_pri: f64,
    sigma2_bar: f64,
    dft: &Dft,
    clamps: &mut ClampCounters,
) -> Result<ModuleAOutput> {
    let n = dft.len();
    check_len(n, obs.len())?;
    check_len(n, z_pri.len())?;
    if !(v_pri > 0.0 && v_pri.is_finite()) {
        return Err(invalid(format!("prior variance must be positive, got {v_pri}")));
    }
    if !(sigma2_bar >= 0.0) {
        return Err(invalid(format!("noise variance must be non-negative, got {sigma2_bar}")));
    }
    let mut z_post = Vec::with_capacity(n);
    let mut v_post = Vec::with_capacity(n);
    match obs {
        Observation::Quantized { re, im, .. } => {
            for ((m, &(lr, ur)), &(li, ui)) in z_pri.iter().zip(re).zip(im) {
                let (mr, vr) = scalar_posterior(m.re, v_pri, sigma2_bar, lr, ur);
                let (mi, vi) = scalar_posterior(m.im, v_pri, sigma2_bar, li, ui);
                z_post.push(Complex64::new(mr, mi));
                v_post.push(vr + vi);
            }
        }
        Observation::Gaussian(y) => {
            let w = v_pri / (v_pri + sigma2_bar);
            let v = v_pri * sigma2_bar / (v_pri + sigma2_bar);
            for (m, y) in z_pri.iter().zip(y) {
                z_post.push(m + (y - m) * w);
                v_post.push(v);
            }
        }
    }
    let v_post_avg = v_post.iter().sum::<f64>() / n as f64;
    let v_ext = extrinsic_variance(v_post_avg, v_pri, clamps);
    let fz_post = dft.forward(&z_post)?;
    let fz_pri = dft.forward(z_pri)?;
    let x_ext = if v_post_avg > 0.0 {
        fz_post.iter().zip(&fz_pri).map(|(a, b)| (a / v_post_avg - b / v_pri) * v_ext).collect()
    } else {
        // Exact observation: the posterior itself is the only information.
        fz_post
    };
    Ok(ModuleAOutput { z_post, v_post, v_post_avg, x_ext, v_ext })
}
