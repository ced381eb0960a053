//! Recording a received frame to a capture file and decoding it later.

use std::path::Path;

use crate::error::{Error, Result};
use crate::framing::{read_capture, write_capture, CaptureMeta, SLOTS_PER_FRAME};

use super::config::{ExperimentConfig, ExperimentKind, Method};
use super::frame::{frame_truth, receive_frame, transmit};
use super::trial::{Scenario, TrialMetrics};

/// Keys stored in the sidecar besides the configuration.
const TRIAL_KEY: &str = "trial";
const PSS_KEY: &str = "pss_position";

/// Simulates trial `trial` of a frame experiment at the first configured
/// SNR and precision and writes the unquantized received stream.
pub fn dump_capture(cfg: &ExperimentConfig, trial: u64, path: &Path) -> Result<CaptureMeta> {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::EndToEndFrame,
        snr_db: cfg.snr_db[..1].to_vec(),
        bits: cfg.bits[..1].to_vec(),
        ..cfg.clone()
    };
    let scn = Scenario::new(&cfg)?;
    let truth = frame_truth(&scn, trial)?;
    let rx = transmit(&scn, &truth, cfg.snr_db[0], trial, SLOTS_PER_FRAME + 1)?;
    let mut meta = CaptureMeta::new(cfg.n, cfg.seed);
    meta.extra = cfg.to_map();
    meta.extra.remove("n");
    meta.extra.remove("seed");
    meta.extra.insert(TRIAL_KEY.into(), trial.to_string());
    meta.extra.insert(PSS_KEY.into(), rx.pss_position.to_string());
    write_capture(path, &rx.samples, &meta)?;
    Ok(meta)
}

/// Decodes a capture written by [`dump_capture`]; the transmitted payload is
/// regenerated from the recorded seed and trial index for scoring.
pub fn replay_capture(path: &Path, method: Method) -> Result<(ExperimentConfig, TrialMetrics)> {
    let (samples, meta) = read_capture(path)?;
    let mut map = meta.extra.clone();
    let take = |map: &mut crate::harness::ConfigMap, key: &str| -> Result<u64> {
        let v = map.remove(key).ok_or_else(|| Error::Capture(format!("metadata lacks '{key}'")))?;
        v.parse().map_err(|_| Error::Capture(format!("bad metadata value {key} = {v}")))
    };
    let trial = take(&mut map, TRIAL_KEY)?;
    let pss_position = take(&mut map, PSS_KEY)? as usize;
    map.insert("n".into(), meta.n.to_string());
    map.insert("seed".into(), meta.seed.to_string());
    let cfg = ExperimentConfig::from_map(&map).map_err(|e| Error::Capture(format!("metadata: {e}")))?;
    let scn = Scenario::new(&cfg)?;
    let truth = frame_truth(&scn, trial)?;
    let m = receive_frame(&scn, &samples, &truth, pss_position, cfg.bits[0], method, trial)?;
    Ok((cfg, m))
}
