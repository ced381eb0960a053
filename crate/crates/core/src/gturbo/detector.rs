use crate::error::{check_len, invalid, Result};
use crate::modem::{subcarrier_map, Constellation, SubcarrierPlan};
use crate::numerics::{Complex64, Dft, ZERO};

use super::module_a::{extrinsic_variance, module_a, ClampCounters, Observation, V_MIN};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub constellation: Constellation,
    pub t_max: usize,
    pub v_floor: f64,
    /// Skip Module A and use `x_pri = F q` with this variance (conventional
    /// one-tap receiver).
    pub bypass_variance: Option<f64>,
}

impl DetectorConfig {
    pub fn new(constellation: Constellation, t_max: usize) -> Self {
        Self { constellation, t_max, v_floor: V_MIN, bypass_variance: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 || !(self.v_floor >= 0.0) {
            return Err(invalid(format!("invalid detector configuration {self:?}")));
        }
        if let Some(v) = self.bypass_variance {
            if !(v > 0.0) {
                return Err(invalid(format!("bypass variance must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Posterior of the constellation symbols given `x_pri = h̄·s + CN(0, v_pri)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleBOutput {
    pub s_post: Vec<Complex64>,
    pub v_post: Vec<f64>,
    /// `(1/N)·Σ_j |h̄_j|²·v_post,j`.
    pub v_post_avg: f64,
}

/// Discrete-prior posterior mean and variance of one symbol observed as
/// `r = s + CN(0, var)`.
pub fn symbol_posterior(r: Complex64, var: f64, c: &Constellation) -> (Complex64, f64) {
    let pts = c.points();
    if !(var > 0.0) || !var.is_finite() {
        if var.is_infinite() || r.is_nan() {
            return (ZERO, 1.0);
        }
        return (pts[c.nearest(r)], 0.0);
    }
    let d: Vec<f64> = pts.iter().map(|s| -(r - s).norm_sqr() / var).collect();
    let top = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m, mut e2) = (0.0, ZERO, 0.0);
    for (s, di) in pts.iter().zip(&d) {
        let w = (di - top).exp();
        z += w;
        m += s * w;
        e2 += s.norm_sqr() * w;
    }
    let m = m / z;
    (m, (e2 / z - m.norm_sqr()).max(0.0))
}

/// Module B of the detector; `known` lists data-subcarrier indices carrying a
/// fixed symbol.
pub fn detector_module_b(
    x_pri_d: &[Complex64],
    v_pri: f64,
    h_bar_d: &[Complex64],
    c: &Constellation,
    n: usize,
    known: &[(usize, Complex64)],
) -> Result<ModuleBOutput> {
    check_len(h_bar_d.len(), x_pri_d.len())?;
    let mut s_post = Vec::with_capacity(x_pri_d.len());
    let mut v_post = Vec::with_capacity(x_pri_d.len());
    for (x, h) in x_pri_d.iter().zip(h_bar_d) {
        let g = h.norm_sqr();
        if g == 0.0 {
            s_post.push(ZERO);
            v_post.push(1.0);
            continue;
        }
        let (m, v) = symbol_posterior(x / h, v_pri / g, c);
        s_post.push(m);
        v_post.push(v);
    }
    for &(j, s) in known {
        s_post[j] = s;
        v_post[j] = 0.0;
    }
    let v_post_avg = h_bar_d.iter().zip(&v_post).map(|(h, v)| h.norm_sqr() * v).sum::<f64>() / n as f64;
    Ok(ModuleBOutput { s_post, v_post, v_post_avg })
}

/// Final detector state plus the Module B input recorded at every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub x_pri_d: Vec<Complex64>,
    pub v_pri: f64,
    pub iterations: usize,
    /// `(x_pri_d, v_pri)` per iteration, padded with the final state up to `t_max`.
    pub snapshots: Vec<(Vec<Complex64>, f64)>,
    pub clamps: ClampCounters,
}

/// Iterative detection of one data symbol from its quantized samples.
pub fn detect(
    obs: &Observation,
    h_bar_d: &[Complex64],
    sigma2_bar: f64,
    plan: &SubcarrierPlan,
    dft: &Dft,
    cfg: &DetectorConfig,
    known: &[(usize, Complex64)],
) -> Result<Detection> {
    cfg.validate()?;
    let n = plan.n();
    check_len(plan.n_d(), h_bar_d.len())?;
    check_len(n, obs.len())?;
    if known.iter().any(|&(j, _)| j >= plan.n_d()) {
        return Err(invalid("known-symbol index outside the data subcarriers"));
    }
    let mut clamps = ClampCounters::default();
    let mut snapshots: Vec<(Vec<Complex64>, f64)> = Vec::with_capacity(cfg.t_max);

    if let Some(v) = cfg.bypass_variance {
        let x = plan.extract(&dft.forward(obs.samples())?)?;
        snapshots.resize(cfg.t_max, (x.clone(), v));
        return Ok(Detection { x_pri_d: x, v_pri: v, iterations: 1, snapshots, clamps });
    }

    let mut v_a = h_bar_d.iter().map(|h| h.norm_sqr()).sum::<f64>() / n as f64;
    if !(v_a > 0.0) {
        return Err(invalid("channel estimate is identically zero"));
    }
    let mut z_pri = vec![ZERO; n];
    for t in 0..cfg.t_max {
        let out = module_a(obs, &z_pri, v_a, sigma2_bar, dft, &mut clamps)?;
        let v_b = out.v_ext;
        if v_b <= cfg.v_floor && t > 0 {
            break;
        }
        let x_pri_d = plan.extract(&out.x_ext)?;
        snapshots.push((x_pri_d, v_b));
        if t + 1 == cfg.t_max {
            break;
        }
        let (x_pri_d, _) = snapshots.last().expect("just pushed");
        let b = detector_module_b(x_pri_d, v_b, h_bar_d, &cfg.constellation, n, known)?;
        let v_next = extrinsic_variance(b.v_post_avg, v_b, &mut clamps);
        if v_next <= cfg.v_floor {
            break;
        }
        let x_post: Vec<Complex64> = b.s_post.iter().zip(h_bar_d).map(|(s, h)| s * h).collect();
        let fx_post = dft.inverse(&subcarrier_map(&x_post, plan)?)?;
        let fx_pri = dft.inverse(&subcarrier_map(x_pri_d, plan)?)?;
        z_pri = fx_post.iter().zip(&fx_pri).map(|(a, b2)| (a / b.v_post_avg - b2 / v_b) * v_next).collect();
        v_a = v_next;
    }
    let iterations = snapshots.len();
    let (x_pri_d, v_pri) = snapshots.last().cloned().expect("at least one iteration");
    snapshots.resize(cfg.t_max, (x_pri_d.clone(), v_pri));
    Ok(Detection { x_pri_d, v_pri, iterations, snapshots, clamps })
}
