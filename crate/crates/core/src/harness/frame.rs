//! Frame-level experiments: correlation synchronization on the quantized
//! stream, and the full receive chain (AGC from the assistant power
//! accumulator, noise estimate from the NULL symbol, per-slot estimation,
//! detection and decoding).

use std::f64::consts::PI;

use crate::channel::{apply_awgn, convolve, draw_channel, freq_response, ChannelRealization};
use crate::error::{invalid, Result};
use crate::framing::{
    build_frame, zc_pss, Frame, FrameSchedule, LayoutEntry, Role, DATA_SLOTS, FIRST_DATA_SLOT, SYMBOLS_PER_SLOT,
};
use crate::frontend::{
    accumulate_power_decimated, estimate_noise_power, make_quantizer, quantize_complex, sync_search, PowerReport,
    ASSIST_DECIMATION,
};
use crate::gturbo::cached_weights;
use crate::numerics::{norm_sqr, streams, Complex64, RandomSource};

use super::config::Method;
use super::trial::{receive_slot, Scenario, SlotSamples, SlotTruth, Stage, TrialMetrics};

/// Transmitted frame and channel of one trial.
#[derive(Debug, Clone)]
pub struct FrameTruth {
    pub frame: Frame,
    pub channel: ChannelRealization,
    pub h_d: Vec<Complex64>,
}

/// A received stream whose true synchronization position is known.
#[derive(Debug, Clone)]
pub struct ReceivedStream {
    /// Unquantized samples after channel and noise.
    pub samples: Vec<Complex64>,
    /// Stream index of the first post-CP sample of the slot-0 PSS.
    pub pss_position: usize,
}

fn schedule(scn: &Scenario) -> Result<FrameSchedule> {
    FrameSchedule::new(scn.cfg.n, scn.cfg.pss)
}

fn pss_entry(layout: &[LayoutEntry]) -> Result<LayoutEntry> {
    layout
        .iter()
        .find(|e| e.slot == 0 && e.role == Role::Pss)
        .copied()
        .ok_or_else(|| invalid("schedule has no synchronization symbol in slot 0"))
}

/// Search window length in samples.
pub fn sync_window(scn: &Scenario) -> Result<usize> {
    let slot = schedule(scn)?.slot_len();
    let w = scn.cfg.sync_window.unwrap_or(slot);
    if w == 0 || w > slot {
        return Err(invalid(format!("synchronization window must be 1..={slot} samples, got {w}")));
    }
    Ok(w)
}

pub fn frame_truth(scn: &Scenario, trial: u64) -> Result<FrameTruth> {
    let cfg = &scn.cfg;
    let sched = schedule(scn)?;
    let payload =
        RandomSource::new(cfg.seed, streams::PAYLOAD).for_trial(trial).bits(DATA_SLOTS * scn.coding.info_bits());
    let frame = build_frame(&payload, &sched, &scn.plan, &scn.pilot, &scn.coding, cfg.zc_root)?;
    let mut rng = RandomSource::new(cfg.seed, streams::CHANNEL).for_trial(trial);
    let channel = draw_channel(&mut rng, &cfg.taps_db)?;
    let h_d = scn.plan.extract(&freq_response(&channel, &scn.dft)?)?;
    Ok(FrameTruth { frame, channel, h_d })
}

/// Sends the previous frame's last slot, then `slots` slots of the
/// (periodically repeated) frame, through the channel, and starts the
/// receiver at a random point so that the PSS falls uniformly inside the
/// search window.
pub fn transmit(scn: &Scenario, truth: &FrameTruth, snr_db: f64, trial: u64, slots: usize) -> Result<ReceivedStream> {
    let sched = schedule(scn)?;
    let slot_len = sched.slot_len();
    let frame = &truth.frame.samples;
    let mut tx = frame[frame.len() - slot_len..].to_vec();
    tx.extend(frame.iter().cycle().take(slots * slot_len));

    let mut rx = convolve(&tx, &truth.channel.taps);
    let p_sig = norm_sqr(&truth.h_d) / scn.plan.n() as f64;
    let sigma2 = p_sig / 10f64.powf(snr_db / 10.0);
    apply_awgn(&mut rx, sigma2, &mut RandomSource::new(scn.cfg.seed, streams::NOISE).for_trial(trial))?;

    let window = sync_window(scn)?;
    let pss_core = pss_entry(&truth.frame.ledger.layout)?.core_offset();
    let pss_position = RandomSource::new(scn.cfg.seed, streams::TIMING).for_trial(trial).index(window);
    let start = slot_len + pss_core - pss_position;
    rx.drain(..start);
    Ok(ReceivedStream { samples: rx, pss_position })
}

/// AGC and quantization of a whole stream; returns the quantized samples
/// and the measured received power.
fn agc_quantize(samples: &[Complex64], bits: u32) -> Result<(Vec<Complex64>, f64)> {
    let p_r = accumulate_power_decimated(samples, ASSIST_DECIMATION)?;
    let report = PowerReport::new(p_r, 0.0)?;
    let sqrt_g = report.g_agc.sqrt();
    let q = make_quantizer(bits, report.quantizer_power())?;
    let scaled: Vec<Complex64> = samples.iter().map(|v| v * sqrt_g).collect();
    Ok((quantize_complex(&scaled, &q)?, p_r))
}

/// Correlation peak over the search window of the quantized stream.
pub fn synchronize(scn: &Scenario, samples: &[Complex64], bits: u32) -> Result<(usize, f64)> {
    let (q, p_r) = agc_quantize(samples, bits)?;
    let (_, t_r) = zc_pss(scn.cfg.zc_root, &scn.plan, &scn.dft)?;
    Ok((sync_search(&q, &t_r, 0..sync_window(scn)?)?, p_r))
}

/// One synchronization trial: STO of the detected peak in samples.
pub fn sync_trial(scn: &Scenario, snr_db: f64, bits: u32, trial: u64) -> Result<TrialMetrics> {
    let truth = frame_truth(scn, trial)?;
    let rx = transmit(scn, &truth, snr_db, trial, 2)?;
    let (found, _) = synchronize(scn, &rx.samples, bits)?;
    let sto = found as i64 - rx.pss_position as i64;
    Ok(TrialMetrics::from_outcomes(trial, &[], Some(sto)))
}

fn core_at<'a>(samples: &'a [Complex64], frame_start: i64, e: &LayoutEntry, n: usize) -> Result<&'a [Complex64]> {
    let start = frame_start + e.core_offset() as i64;
    if start < 0 {
        return Err(invalid("symbol precedes the start of the captured stream"));
    }
    let start = start as usize;
    samples.get(start..start + n).ok_or_else(|| invalid("symbol extends past the end of the captured stream"))
}

/// Synchronizes, measures power and noise, then receives every data slot.
pub fn receive_frame(
    scn: &Scenario,
    samples: &[Complex64],
    truth: &FrameTruth,
    pss_position: usize,
    bits: u32,
    method: Method,
    trial: u64,
) -> Result<TrialMetrics> {
    let n = scn.plan.n();
    let layout = &truth.frame.ledger.layout;
    let (found, p_r) = synchronize(scn, samples, bits)?;
    let sto = found as i64 - pss_position as i64;
    let backoff = scn.cfg.timing_backoff;
    let frame_start = found as i64 - backoff as i64 - pss_entry(layout)?.core_offset() as i64;
    let weights = cached_weights(&scn.plan, scn.cfg.effective_l_hat() + 2 * backoff, scn.cfg.gamma2)?;
    // Channel seen through DFT windows shifted by `sto − backoff` samples.
    let shift = (sto - backoff as i64) as f64;
    let h_eff: Vec<Complex64> = truth
        .h_d
        .iter()
        .zip(scn.plan.data_frequencies())
        .map(|(h, f)| h * Complex64::from_polar(1.0, 2.0 * PI * f as f64 * shift / n as f64))
        .collect();

    let null = layout.iter().find(|e| e.role == Role::Null).ok_or_else(|| invalid("schedule has no NULL symbol"))?;
    let null_core: Vec<Complex64> =
        core_at(samples, frame_start, null, n)?.iter().step_by(ASSIST_DECIMATION).copied().collect();
    let power = PowerReport::new(p_r, estimate_noise_power(&null_core)?)?;

    let ledger = &truth.frame.ledger;
    let mut outcomes = Vec::with_capacity(DATA_SLOTS);
    for slot in FIRST_DATA_SLOT..FIRST_DATA_SLOT + DATA_SLOTS {
        let entries = &layout[slot * SYMBOLS_PER_SLOT..(slot + 1) * SYMBOLS_PER_SLOT];
        let pilot = core_at(samples, frame_start, &entries[0], n)?;
        let data = entries[1..]
            .iter()
            .map(|e| if e.role == Role::Data { core_at(samples, frame_start, e, n).map(Some) } else { Ok(None) })
            .collect::<Result<Vec<_>>>()?;
        let i = slot - FIRST_DATA_SLOT;
        let slot_truth = SlotTruth { h_d: &h_eff, coded: &ledger.coded_bits[i], info: &ledger.info_bits[i] };
        let s = SlotSamples { pilot, data };
        outcomes.push(receive_slot(scn, &s, &slot_truth, &weights, &power, bits, method, Stage::Decode)?);
    }
    Ok(TrialMetrics::from_outcomes(trial, &outcomes, Some(sto)))
}

/// One end-to-end frame trial.
pub fn frame_trial(scn: &Scenario, snr_db: f64, bits: u32, method: Method, trial: u64) -> Result<TrialMetrics> {
    let truth = frame_truth(scn, trial)?;
    let rx = transmit(scn, &truth, snr_db, trial, crate::framing::SLOTS_PER_FRAME + 1)?;
    receive_frame(scn, &rx.samples, &truth, rx.pss_position, bits, method, trial)
}
