//! Conventional receiver that ignores the quantizer: LS pilot division plus
//! the LMMSE smoother, then one-tap equalization and max-log demapping.

use crate::coding::LlrVector;
use crate::error::{check_len, invalid, Result};
use crate::frontend::gaussian_distortion;
use crate::gturbo::{compute_llr, LmmseWeights};
use crate::modem::{Constellation, SubcarrierPlan};
use crate::numerics::{Complex64, Dft};

/// Conventional channel estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConventionalEstimate {
    /// `W_d·((F q_P)_d / p̄_d)`.
    pub h_hat: Vec<Complex64>,
    /// `√g_agc · h_hat`, the CSI used for equalization.
    pub h_bar: Vec<Complex64>,
}

pub fn conventional_estimate(
    q_p: &[Complex64],
    p_d: &[Complex64],
    g_agc: f64,
    plan: &SubcarrierPlan,
    dft: &Dft,
    weights: &LmmseWeights,
) -> Result<ConventionalEstimate> {
    check_len(plan.n_d(), p_d.len())?;
    if p_d.iter().any(|p| p.norm_sqr() == 0.0) {
        return Err(invalid("pilot has a zero entry on a data subcarrier"));
    }
    let sqrt_g = g_agc.sqrt();
    let fq = plan.extract(&dft.forward(q_p)?)?;
    let ls: Vec<Complex64> = fq.iter().zip(p_d).map(|(y, p)| y / (p * sqrt_g)).collect();
    let h_hat = weights.apply(&ls)?;
    let h_bar = h_hat.iter().map(|h| h * sqrt_g).collect();
    Ok(ConventionalEstimate { h_hat, h_bar })
}

/// Effective noise variance of the equalizer input: scaled thermal noise
/// plus, optionally, the Gaussian-input distortion of the quantizer at
/// per-dimension input power `p_q`.
pub fn conventional_variance(sigma2_bar: f64, bits: Option<u32>, p_q: f64) -> f64 {
    let distortion = bits.and_then(gaussian_distortion).map_or(0.0, |e| 2.0 * e * p_q);
    sigma2_bar + distortion
}

/// One-tap equalization `x̃_j = (F q_D)_j / h̄_j` followed by max-log LLRs.
pub fn conventional_detect(
    q_d: &[Complex64],
    h_bar_d: &[Complex64],
    variance: f64,
    plan: &SubcarrierPlan,
    dft: &Dft,
    c: &Constellation,
) -> Result<LlrVector> {
    let fq = plan.extract(&dft.forward(q_d)?)?;
    compute_llr(&fq, variance, h_bar_d, c)
}
