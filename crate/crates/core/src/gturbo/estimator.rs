use crate::error::{check_len, invalid, Result};
use crate::frontend::PowerReport;
use crate::modem::{subcarrier_map, SubcarrierPlan};
use crate::numerics::{norm_sqr, Complex64, Dft, ZERO};

use super::lmmse::LmmseWeights;
use super::module_a::{module_a, ClampCounters, Observation, V_MAX, V_MIN};

/// How the divergence coefficient of the LMMSE stage is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaRule {
    /// `(1/N_d)·Σ_j W_jj`: the average derivative of the denoiser output
    /// with respect to its input.
    DiagonalMean,
    /// `(1/N_d)·Σ_j W_jj / p̄_j`, literally dividing by the signed pilot.
    PilotWeighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Assumed number of channel taps.
    pub l_hat: usize,
    pub gamma2: f64,
    pub t_max: usize,
    /// Rescale the estimate to the externally measured channel gain.
    pub normalize: bool,
    pub v_floor: f64,
    pub alpha: AlphaRule,
    /// Replace Module A by `x_pri = F q` (reduces to the conventional estimator).
    pub bypass_module_a: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            l_hat: 4,
            gamma2: 1e-5,
            t_max: 10,
            normalize: false,
            v_floor: V_MIN,
            alpha: AlphaRule::DiagonalMean,
            bypass_module_a: false,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_hat == 0 || self.t_max == 0 || !(self.gamma2 > 0.0) || !(self.v_floor >= 0.0) {
            return Err(invalid(format!("invalid estimator configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// Estimate of `h_d` (after normalization when enabled).
    pub h_hat: Vec<Complex64>,
    /// CSI handed to the detector, `√g_agc · h_hat`.
    pub h_bar: Vec<Complex64>,
    /// `h_hat` after each iteration.
    pub trace: Vec<Vec<Complex64>>,
    pub iterations: usize,
    pub clamps: ClampCounters,
}

fn normalize(h: &[Complex64], p_h: f64) -> Vec<Complex64> {
    let rms = (norm_sqr(h) / h.len() as f64).sqrt();
    if rms == 0.0 {
        return h.to_vec();
    }
    let s = p_h.max(0.0).sqrt() / rms;
    h.iter().map(|v| v * s).collect()
}

/// Divergence coefficient `α` of the LMMSE denoiser for pilot `p̄_d`.
pub fn alpha_coefficient(rule: AlphaRule, weights: &LmmseWeights, p_bar: &[Complex64]) -> Complex64 {
    let nd = weights.n_d() as f64;
    match rule {
        AlphaRule::DiagonalMean => weights.diagonal().iter().sum::<Complex64>() / nd,
        AlphaRule::PilotWeighted => weights.diagonal().iter().zip(p_bar).map(|(w, p)| w / p).sum::<Complex64>() / nd,
    }
}

/// Extrinsic output of the LMMSE stage: `x_ext = c·(x_post − α·x_pri)` with
/// `c` chosen to minimize the error, and its variance measured against
/// `x_post`. Returns `(x_ext, v_ext)` on the data subcarriers.
pub fn lmmse_extrinsic(
    x_pri: &[Complex64],
    h_hat: &[Complex64],
    p_bar: &[Complex64],
    alpha: Complex64,
) -> (Vec<Complex64>, f64) {
    let x_post: Vec<Complex64> = h_hat.iter().zip(p_bar).map(|(h, p)| h * p).collect();
    let diff: Vec<Complex64> = x_post.iter().zip(x_pri).map(|(a, b)| a - alpha * b).collect();
    let denom = norm_sqr(&diff);
    let c =
        if denom > 0.0 { x_pri.iter().zip(&diff).map(|(a, b)| a.conj() * b).sum::<Complex64>() / denom } else { ZERO };
    let x_ext: Vec<Complex64> = diff.iter().map(|d| c * d).collect();
    let v = x_ext.iter().zip(&x_post).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / x_pri.len().max(1) as f64;
    (x_ext, v)
}

/// Iterative quantization-aware channel estimation from one pilot symbol.
///
/// `p_d` is the unit-modulus pilot on the data subcarriers; the AGC gain,
/// received power and noise estimate come from `power`.
pub fn estimate_channel(
    obs: &Observation,
    p_d: &[Complex64],
    plan: &SubcarrierPlan,
    dft: &Dft,
    power: &PowerReport,
    weights: &LmmseWeights,
    cfg: &EstimatorConfig,
) -> Result<ChannelEstimate> {
    cfg.validate()?;
    let n = plan.n();
    let nd = plan.n_d();
    check_len(nd, p_d.len())?;
    check_len(nd, weights.n_d())?;
    check_len(n, obs.len())?;
    if p_d.iter().any(|p| p.norm_sqr() == 0.0) {
        return Err(invalid("pilot has a zero entry on a data subcarrier"));
    }
    let g = power.g_agc;
    let sqrt_g = g.sqrt();
    let p_bar: Vec<Complex64> = p_d.iter().map(|p| p * sqrt_g).collect();
    let sigma2_bar = g * power.sigma2_hat;
    let p_h = (power.p_r - power.sigma2_hat) * n as f64 / nd as f64;
    let finish = |h: &[Complex64]| if cfg.normalize { normalize(h, p_h) } else { h.to_vec() };

    let alpha = alpha_coefficient(cfg.alpha, weights, &p_bar);

    let mut clamps = ClampCounters::default();
    let mut z_pri = vec![ZERO; n];
    let mut v_pri = 1.0 - sigma2_bar;
    if !(v_pri > 0.0) {
        clamps.init += 1;
        v_pri = 1e-3;
    }
    let bypass_x = if cfg.bypass_module_a { Some(plan.extract(&dft.forward(obs.samples())?)?) } else { None };

    let mut trace = Vec::with_capacity(cfg.t_max);
    let mut h_hat: Vec<Complex64> = Vec::new();
    for t in 0..cfg.t_max {
        let x_pri = match &bypass_x {
            Some(x) => x.clone(),
            None => {
                let out = module_a(obs, &z_pri, v_pri, sigma2_bar, dft, &mut clamps)?;
                if out.v_ext <= cfg.v_floor && t > 0 {
                    break;
                }
                plan.extract(&out.x_ext)?
            }
        };
        let ls: Vec<Complex64> = x_pri.iter().zip(&p_bar).map(|(x, p)| x / p).collect();
        h_hat = weights.apply(&ls)?;
        trace.push(finish(&h_hat));

        let (x_a, v_next) = lmmse_extrinsic(&x_pri, &h_hat, &p_bar, alpha);
        if v_next <= cfg.v_floor {
            break;
        }
        if v_next > V_MAX {
            clamps.high += 1;
        }
        v_pri = v_next.min(V_MAX);
        z_pri = dft.inverse(&subcarrier_map(&x_a, plan)?)?;
    }
    let iterations = trace.len();
    let h_hat = trace.last().cloned().unwrap_or_else(|| finish(&h_hat));
    let h_bar = h_hat.iter().map(|h| h * sqrt_g).collect();
    Ok(ChannelEstimate { h_hat, h_bar, trace, iterations, clamps })
}
