use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, invalid, Result};

/// Unitary DFT of a fixed power-of-two length.
///
/// `forward` is left-multiplication by the normalized DFT matrix `F`
/// (entry `(m, n)` = `exp(-2πj·m·n/N)/√N`), `inverse` by `F^H`.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    scale: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(invalid(format!("DFT length must be a power of two, got {n}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = v.to_vec();
        self.forward_in_place(&mut out)?;
        Ok(out)
    }

    pub fn inverse(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = v.to_vec();
        self.inverse_in_place(&mut out)?;
        Ok(out)
    }

    pub fn forward_in_place(&self, v: &mut [Complex64]) -> Result<()> {
        check_len(self.n, v.len())?;
        self.fwd.process(v);
        v.iter_mut().for_each(|x| *x *= self.scale);
        Ok(())
    }

    pub fn inverse_in_place(&self, v: &mut [Complex64]) -> Result<()> {
        check_len(self.n, v.len())?;
        self.inv.process(v);
        v.iter_mut().for_each(|x| *x *= self.scale);
        Ok(())
    }
}

/// Squared Euclidean norm.
pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_vec(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn impulse_maps_to_constant() {
        let n = 64;
        let dft = Dft::new(n).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[0] = Complex64::new(1.0, 0.0);
        let out = dft.forward(&v).unwrap();
        let expect = 1.0 / (n as f64).sqrt();
        for x in out {
            assert!((x - Complex64::new(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_maps_to_dc() {
        let n = 32;
        let dft = Dft::new(n).unwrap();
        let out = dft.forward(&vec![Complex64::new(1.0, 0.0); n]).unwrap();
        assert!((out[0].re - (n as f64).sqrt()).abs() < 1e-12);
        assert!(out[1..].iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn unitary_and_parseval() {
        let n = 2048;
        let dft = Dft::new(n).unwrap();
        for seed in 0..5 {
            let v = random_vec(n, seed);
            let f = dft.forward(&v).unwrap();
            let e_in = norm_sqr(&v);
            assert!((norm_sqr(&f) - e_in).abs() / e_in < 1e-12);
            let back = dft.inverse(&f).unwrap();
            let err: f64 = back.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!((err / e_in).sqrt() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_matrix() {
        let n = 16;
        let dft = Dft::new(n).unwrap();
        let v = random_vec(n, 9);
        let f = dft.forward(&v).unwrap();
        for m in 0..n {
            let direct: Complex64 = (0..n)
                .map(|k| {
                    let ang = -2.0 * std::f64::consts::PI * (m * k) as f64 / n as f64;
                    v[k] * Complex64::from_polar(1.0, ang)
                })
                .sum::<Complex64>()
                / (n as f64).sqrt();
            assert!((direct - f[m]).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_wrong_length() {
        let dft = Dft::new(8).unwrap();
        assert!(dft.forward(&[Complex64::default(); 4]).is_err());
        assert!(Dft::new(12).is_err());
    }
}
