use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Seedable source of independent random streams.
///
/// Every draw sequence is a pure function of `(seed, stream_id, trial)`: the
/// ChaCha key is derived from the seed and trial index and the ChaCha stream
/// word carries the stream id, so results do not depend on which worker
/// thread runs which trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSource {
    pub seed: u64,
    pub stream_id: u64,
}

/// Named streams so that independent parts of a trial never share draws.
pub mod streams {
    pub const CHANNEL: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const PAYLOAD: u64 = 3;
    pub const PILOT: u64 = 4;
    pub const MISMATCH: u64 = 5;
    pub const TIMING: u64 = 6;
    pub const INTERLEAVER: u64 = 7;
    pub const TEST: u64 = 99;
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Generator for one trial.
    pub fn for_trial(&self, trial: u64) -> Rng64 {
        let mut key = [0u8; 32];
        let words = [
            splitmix(self.seed),
            splitmix(self.seed ^ 0x9E37_79B9_7F4A_7C15),
            splitmix(trial.wrapping_add(0xD1B5_4A32_D192_ED03)),
            splitmix(trial ^ self.seed.rotate_left(17)),
        ];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut inner = ChaCha12Rng::from_seed(key);
        inner.set_stream(self.stream_id);
        Rng64 { inner }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial generator handed out by [`RandomSource::for_trial`].
#[derive(Debug, Clone)]
pub struct Rng64 {
    inner: ChaCha12Rng,
}

impl Rng64 {
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.gen_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn bit(&mut self) -> u8 {
        self.inner.gen::<bool>() as u8
    }

    pub fn bits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.bit()).collect()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Circularly-symmetric complex Gaussian with the given total variance.
    pub fn complex_normal(&mut self, variance: f64) -> Complex64 {
        let s = (0.5 * variance).sqrt();
        Complex64::new(s * self.normal(), s * self.normal())
    }
}
