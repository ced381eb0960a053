//! Shared numeric kernels: unitary DFT, truncated-Gaussian moment ratios and
//! the counter-based random source.

mod dft;
mod quad;
mod rng;
mod tgauss;

pub use dft::{norm_sqr, Dft};
pub use quad::{gauss_legendre, integrate, quantized_posterior_quadrature};
pub use rng::{streams, RandomSource, Rng64};
pub(crate) use tgauss::moments_unchecked;
pub use tgauss::{mills_ratio, normal_cdf, normal_pdf, normal_q, truncated_gaussian_moments, MILLS_SWITCH};

pub use num_complex::Complex64;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
