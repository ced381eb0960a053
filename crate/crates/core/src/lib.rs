#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod baseline;
pub mod channel;
pub mod coding;
pub mod error;
pub mod framing;
pub mod frontend;
pub mod gturbo;
pub mod harness;
pub mod modem;
pub mod numerics;
pub mod parallel;

pub use error::{Error, Result};
