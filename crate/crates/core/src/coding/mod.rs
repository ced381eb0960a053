//! Turbo channel code: two [13, 15] RSC encoders joined by the QPP
//! interleaver, optional puncturing to rate 1/2, and a max-log-MAP iterative
//! decoder.

mod qpp;
mod qpp_table;
mod turbo;

pub use qpp::{invert_permutation, largest_supported_at_most, qpp_interleave, supported_block_sizes};
pub use turbo::{
    coded_len, depuncture, puncture, turbo_decode, turbo_encode, CodeRate, TurboCodeSpec, TurboCodec, TAIL_BITS,
};

/// Log-likelihood ratios, natural log, positive values favour bit 0.
pub type LlrVector = Vec<f64>;
