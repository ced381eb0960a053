use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{check_len, invalid, Result};
use crate::modem::SubcarrierPlan;
use crate::numerics::Complex64;

/// Channel correlation between signed subcarrier frequencies `fm` and `fn_`
/// under a uniform `l_hat`-tap delay profile.
pub fn correlation(fm: i64, fn_: i64, l_hat: usize, n: usize) -> Complex64 {
    if fm == fn_ {
        return Complex64::new(1.0, 0.0);
    }
    let x = 2.0 * PI * l_hat as f64 * (fm - fn_) as f64 / n as f64;
    let jx = Complex64::new(0.0, x);
    (Complex64::new(1.0, 0.0) - (-jx).exp()) / jx
}

fn check_params(l_hat: usize, gamma2: f64) -> Result<()> {
    if l_hat == 0 {
        return Err(invalid("assumed tap count must be at least 1"));
    }
    if !(gamma2 > 0.0 && gamma2.is_finite()) {
        return Err(invalid(format!("regularizer must be positive, got {gamma2}")));
    }
    Ok(())
}

fn data_correlation(freqs: &[i64], l_hat: usize, n: usize) -> DMatrix<Complex64> {
    let nd = freqs.len();
    DMatrix::from_fn(nd, nd, |m, k| correlation(freqs[m], freqs[k], l_hat, n))
}

fn regularized_cholesky(r: &DMatrix<Complex64>, gamma2: f64) -> Result<nalgebra::Cholesky<Complex64, nalgebra::Dyn>> {
    let mut a = r.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += gamma2;
    }
    a.cholesky().ok_or_else(|| invalid("regularized correlation matrix is not positive definite"))
}

/// Full `N × N_d` weight `R_{h h_d} (R_{h_d h_d} + γ²I)^{-1}`; row `k` is FFT bin `k`.
pub fn lmmse_weight(plan: &SubcarrierPlan, l_hat: usize, gamma2: f64) -> Result<DMatrix<Complex64>> {
    check_params(l_hat, gamma2)?;
    let n = plan.n();
    let freqs = plan.data_frequencies();
    let chol = regularized_cholesky(&data_correlation(&freqs, l_hat, n), gamma2)?;
    // W^H = A^{-1} R_{h h_d}^H since A is Hermitian.
    let r_hd_h =
        DMatrix::from_fn(freqs.len(), n, |m, k| correlation(plan.signed_frequency(k), freqs[m], l_hat, n).conj());
    Ok(chol.solve(&r_hd_h).adjoint())
}

/// Data-row block `W_d` of the LMMSE weight, stored row-major for fast
/// matrix–vector products.
#[derive(Debug, Clone, PartialEq)]
pub struct LmmseWeights {
    nd: usize,
    rows: Vec<Complex64>,
    diag: Vec<Complex64>,
    pub l_hat: usize,
    pub gamma2: f64,
}

impl LmmseWeights {
    pub fn compute(plan: &SubcarrierPlan, l_hat: usize, gamma2: f64) -> Result<Self> {
        check_params(l_hat, gamma2)?;
        let freqs = plan.data_frequencies();
        let r = data_correlation(&freqs, l_hat, plan.n());
        let chol = regularized_cholesky(&r, gamma2)?;
        // R and A = R + γ²I commute, so W_d = R A^{-1} = A^{-1} R.
        let w = chol.solve(&r);
        let nd = freqs.len();
        let mut rows = Vec::with_capacity(nd * nd);
        for i in 0..nd {
            rows.extend(w.row(i).iter().copied());
        }
        let diag = (0..nd).map(|i| w[(i, i)]).collect();
        Ok(Self { nd, rows, diag, l_hat, gamma2 })
    }

    pub fn n_d(&self) -> usize {
        self.nd
    }

    pub fn diagonal(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i * self.nd + j]
    }

    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.nd, v.len())?;
        Ok(self
            .rows
            .chunks_exact(self.nd)
            .map(|row| {
                let (mut re, mut im) = (0.0, 0.0);
                for (w, x) in row.iter().zip(v) {
                    re += w.re * x.re - w.im * x.im;
                    im += w.re * x.im + w.im * x.re;
                }
                Complex64::new(re, im)
            })
            .collect())
    }
}

type CacheKey = (usize, usize, usize, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<LmmseWeights>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<LmmseWeights>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// [`LmmseWeights::compute`] memoized per `(N, N_d, L̂, γ²)`.
pub fn cached_weights(plan: &SubcarrierPlan, l_hat: usize, gamma2: f64) -> Result<Arc<LmmseWeights>> {
    let key = (plan.n(), plan.n_d(), l_hat, gamma2.to_bits());
    let mut guard = cache().lock().expect("weight cache poisoned");
    if let Some(w) = guard.get(&key) {
        return Ok(Arc::clone(w));
    }
    let w = Arc::new(LmmseWeights::compute(plan, l_hat, gamma2)?);
    guard.insert(key, Arc::clone(&w));
    Ok(w)
}
