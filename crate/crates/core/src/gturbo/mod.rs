//! Generalized-turbo receiver: the quantization-aware Module A shared by
//! both algorithms, the LMMSE-denoiser channel estimator, the
//! discrete-prior data detector and soft demapping.

mod detector;
mod estimator;
mod llr;
mod lmmse;
mod module_a;

pub use detector::{detect, detector_module_b, symbol_posterior, Detection, DetectorConfig, ModuleBOutput};
pub use estimator::{
    alpha_coefficient, estimate_channel, lmmse_extrinsic, AlphaRule, ChannelEstimate, EstimatorConfig,
};
pub use llr::{compute_llr, hard_decisions, llr_equalized};
pub use lmmse::{cached_weights, correlation, lmmse_weight, LmmseWeights};
pub use module_a::{
    extrinsic_variance, module_a, scalar_posterior, ClampCounters, ModuleAOutput, Observation, V_MAX, V_MIN,
};
