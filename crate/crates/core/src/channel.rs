//! Tapped-delay-line multipath channel, AWGN and SNR calibration.

use crate::error::{invalid, Result};
use crate::numerics::{norm_sqr, Complex64, Dft, Rng64, ZERO};

/// Default tap powers in dB relative to the first tap.
pub const DEFAULT_PROFILE_DB: [f64; 4] = [0.0, -7.0, -12.0, -18.0];

/// One draw of the tapped-delay-line channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// The `L` leading taps; all later taps are zero.
    pub taps: Vec<Complex64>,
    /// Per-tap average power, linear, summing to one.
    pub profile: Vec<f64>,
}

impl ChannelRealization {
    pub fn from_taps(taps: Vec<Complex64>) -> Self {
        let profile = vec![1.0 / taps.len() as f64; taps.len()];
        Self { taps, profile }
    }

    pub fn tap_count(&self) -> usize {
        self.taps.len()
    }

    pub fn energy(&self) -> f64 {
        norm_sqr(&self.taps)
    }

    /// Taps zero-padded to length `n`.
    pub fn padded(&self, n: usize) -> Vec<Complex64> {
        let mut h = vec![ZERO; n];
        h[..self.taps.len()].copy_from_slice(&self.taps);
        h
    }
}

/// Converts a dB profile to linear powers normalized to unit sum.
pub fn normalized_profile(profile_db: &[f64]) -> Vec<f64> {
    let lin: Vec<f64> = profile_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
    let total: f64 = lin.iter().sum();
    lin.into_iter().map(|p| p / total).collect()
}

/// Draws independent circularly-symmetric Gaussian taps with the given profile.
pub fn draw_channel(rng: &mut Rng64, profile_db: &[f64]) -> Result<ChannelRealization> {
    if profile_db.is_empty() {
        return Err(invalid("channel profile needs at least one tap"));
    }
    let profile = normalized_profile(profile_db);
    let taps = profile.iter().map(|&p| rng.complex_normal(p)).collect();
    Ok(ChannelRealization { taps, profile })
}

/// Frequency response `h_k = Σ_j h_t,j · exp(−2πi·j·k/N)` (unnormalized DFT).
pub fn freq_response(h: &ChannelRealization, dft: &Dft) -> Result<Vec<Complex64>> {
    let n = dft.len();
    if h.tap_count() > n {
        return Err(invalid(format!("{} taps exceed N = {n}", h.tap_count())));
    }
    let scale = (n as f64).sqrt();
    let mut out = dft.forward(&h.padded(n))?;
    out.iter_mut().for_each(|x| *x *= scale);
    Ok(out)
}

/// Adds i.i.d. `CN(0, σ²)` noise in place.
pub fn apply_awgn(y: &mut [Complex64], sigma2: f64, rng: &mut Rng64) -> Result<()> {
    if !(sigma2 >= 0.0) {
        return Err(invalid(format!("noise variance must be non-negative, got {sigma2}")));
    }
    if sigma2 == 0.0 {
        return Ok(());
    }
    for v in y.iter_mut() {
        *v += rng.complex_normal(sigma2);
    }
    Ok(())
}

/// Noise variance giving `snr_db` relative to the mean power of noiseless
/// received samples, `(N_d/N)·‖h_t‖²` for unit-energy symbols.
pub fn calibrate_sigma(channel_energy: f64, n_d: usize, n: usize, snr_db: f64) -> f64 {
    signal_power(channel_energy, n_d, n) / 10f64.powf(snr_db / 10.0)
}

/// Mean power of noiseless received time-domain samples.
pub fn signal_power(channel_energy: f64, n_d: usize, n: usize) -> f64 {
    n_d as f64 / n as f64 * channel_energy
}

/// Causal linear convolution of a sample stream with the channel taps;
/// output has the input's length (transient tail dropped).
pub fn convolve(x: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    (0..x.len()).map(|i| taps.iter().enumerate().take(i + 1).map(|(j, &h)| h * x[i - j]).sum()).collect()
}
