//! One Monte Carlo trial at slot level: channel draw, pilot symbol, six
//! data symbols, estimation, detection and decoding.

use std::sync::Arc;

use crate::baseline::{conventional_detect, conventional_estimate, conventional_variance};
use crate::channel::{apply_awgn, draw_channel, freq_response};
use crate::coding::TurboCodec;
use crate::error::{invalid, Result};
use crate::framing::{PilotSpec, SlotCoding, DATA_SYMBOLS_PER_SLOT, DUMMY_SYMBOL};
use crate::frontend::{make_quantizer, quantize_complex, PowerReport};
use crate::gturbo::{
    cached_weights, compute_llr, detect, estimate_channel, hard_decisions, ClampCounters, DetectorConfig,
    EstimatorConfig, LmmseWeights, Observation,
};
use crate::modem::{subcarrier_map, Constellation, SubcarrierPlan};
use crate::numerics::{norm_sqr, streams, Complex64, Dft, RandomSource};

use super::config::{ExperimentConfig, ExperimentKind, Method};

/// How far down the receive chain a trial goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Estimate,
    Detect,
    Decode,
}

impl Stage {
    pub fn for_kind(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::NmseVsIter | ExperimentKind::NmseVsSnr | ExperimentKind::SyncSto => Stage::Estimate,
            ExperimentKind::BerVsIter => Stage::Detect,
            ExperimentKind::BerVsSnr | ExperimentKind::EndToEndFrame => Stage::Decode,
        }
    }
}

/// Everything derived once from a configuration and shared by all trials.
#[derive(Debug)]
pub struct Scenario {
    pub cfg: ExperimentConfig,
    pub plan: SubcarrierPlan,
    pub dft: Dft,
    pub pilot: PilotSpec,
    pub weights: Arc<LmmseWeights>,
    pub constellation: Constellation,
    pub coding: SlotCoding,
    pub codec: TurboCodec,
}

impl Scenario {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let plan = SubcarrierPlan::new(cfg.n, cfg.n_d)?;
        let dft = Dft::new(cfg.n)?;
        let pilot = PilotSpec::new(cfg.pilot_seed, cfg.n_d);
        let weights = cached_weights(&plan, cfg.effective_l_hat(), cfg.gamma2)?;
        let constellation = Constellation::new(cfg.modulation)?;
        let coding = SlotCoding::new(cfg.n_d, constellation.clone(), cfg.rate, cfg.turbo_iterations)?;
        let codec = TurboCodec::new(coding.spec())?;
        Ok(Self { cfg: cfg.clone(), plan, dft, pilot, weights, constellation, coding, codec })
    }

    pub fn estimator_config(&self, bits: u32, method: Method) -> EstimatorConfig {
        EstimatorConfig {
            l_hat: self.cfg.effective_l_hat(),
            gamma2: self.cfg.gamma2,
            t_max: self.cfg.t_est,
            normalize: method == Method::GTurbo && self.cfg.normalize.enabled(bits),
            v_floor: self.cfg.v_floor,
            alpha: self.cfg.alpha,
            bypass_module_a: false,
        }
    }

    /// Symbols the detector knows in advance (the 16-QAM dummy).
    pub fn known_symbols(&self) -> Vec<(usize, Complex64)> {
        if self.coding.used_subcarriers < self.plan.n_d() {
            vec![(self.plan.n_d() - 1, DUMMY_SYMBOL)]
        } else {
            Vec::new()
        }
    }
}

/// Ground truth a slot receiver is scored against.
#[derive(Debug, Clone, Copy)]
pub struct SlotTruth<'a> {
    pub h_d: &'a [Complex64],
    /// Slot bits in transmission order.
    pub coded: &'a [u8],
    pub info: &'a [u8],
}

/// Unquantized received samples of one slot (post-CP cores, before AGC).
/// `None` marks a data symbol that was not transmitted.
#[derive(Debug, Clone)]
pub struct SlotSamples<'a> {
    pub pilot: &'a [Complex64],
    pub data: Vec<Option<&'a [Complex64]>>,
}

/// Error counts of one received slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    /// Channel-estimate squared error after each estimator iteration.
    pub h_err: Vec<f64>,
    pub h_energy: f64,
    /// Uncoded bit errors after each detector iteration.
    pub bit_errors: Vec<u64>,
    pub bits: u64,
    pub info_errors: u64,
    pub info_bits: u64,
    pub codewords_failed: u64,
    pub codewords: u64,
    pub clamps: ClampCounters,
}

fn pad_to<T: Clone>(mut v: Vec<T>, len: usize) -> Vec<T> {
    if let Some(last) = v.last().cloned() {
        v.resize(len, last);
    }
    v
}

fn observe(samples: &[Complex64], sqrt_g: f64, bits: u32, power: &PowerReport, method: Method) -> Result<Observation> {
    let scaled: Vec<Complex64> = samples.iter().map(|v| v * sqrt_g).collect();
    if method == Method::FullResolution {
        return Ok(Observation::gaussian(scaled));
    }
    let q = make_quantizer(bits, power.quantizer_power())?;
    Observation::quantized(quantize_complex(&scaled, &q)?, &q)
}

/// Runs one receiver over one slot.
pub fn receive_slot(
    scn: &Scenario,
    samples: &SlotSamples<'_>,
    truth: &SlotTruth<'_>,
    weights: &LmmseWeights,
    power: &PowerReport,
    bits: u32,
    method: Method,
    stage: Stage,
) -> Result<SlotOutcome> {
    let cfg = &scn.cfg;
    let (plan, dft, c) = (&scn.plan, &scn.dft, &scn.constellation);
    if samples.data.len() != DATA_SYMBOLS_PER_SLOT {
        return Err(invalid("a slot carries six data symbols"));
    }
    let sqrt_g = power.g_agc.sqrt();
    let sigma2_bar = power.g_agc * power.sigma2_hat;
    let pilot_obs = observe(samples.pilot, sqrt_g, bits, power, method)?;
    let mut clamps = ClampCounters::default();

    let err = |h: &[Complex64]| h.iter().zip(truth.h_d).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
    let (h_err, h_bar) = match method {
        Method::Conventional => {
            let est = conventional_estimate(pilot_obs.samples(), &scn.pilot.p_d, power.g_agc, plan, dft, weights)?;
            (vec![err(&est.h_hat); cfg.t_est], est.h_bar)
        }
        Method::GTurbo | Method::FullResolution => {
            let ecfg = scn.estimator_config(bits, method);
            let est = estimate_channel(&pilot_obs, &scn.pilot.p_d, plan, dft, power, weights, &ecfg)?;
            clamps.merge(&est.clamps);
            (pad_to(est.trace.iter().map(|h| err(h)).collect(), cfg.t_est), est.h_bar)
        }
    };
    let mut out = SlotOutcome {
        h_err,
        h_energy: norm_sqr(truth.h_d),
        bit_errors: vec![0; cfg.t_det],
        bits: 0,
        info_errors: 0,
        info_bits: 0,
        codewords_failed: 0,
        codewords: 0,
        clamps,
    };
    if stage == Stage::Estimate {
        return Ok(out);
    }

    let bps = c.bits_per_symbol();
    let per_vec = scn.coding.bits_per_symbol_vector();
    let used = scn.coding.used_subcarriers;
    let known = scn.known_symbols();
    let mut llrs = Vec::with_capacity(scn.coding.capacity());
    for (i, data) in samples.data.iter().enumerate() {
        let sent = &truth.coded[i * per_vec..(i + 1) * per_vec];
        let Some(data) = data else {
            llrs.extend(std::iter::repeat_n(0.0, per_vec));
            continue;
        };
        let obs = observe(data, sqrt_g, bits, power, method)?;
        let count = |hard: &[u8]| hard[..per_vec].iter().zip(sent).filter(|(a, b)| a != b).count() as u64;
        let llr = match method {
            Method::Conventional => {
                let bits_q = if cfg.baseline_distortion { Some(bits) } else { None };
                let var = conventional_variance(sigma2_bar, bits_q, power.quantizer_power());
                let fq = plan.extract(&dft.forward(obs.samples())?)?;
                let e = count(&hard_decisions(&fq, &h_bar, c));
                out.bit_errors.iter_mut().for_each(|b| *b += e);
                conventional_detect(obs.samples(), &h_bar, var, plan, dft, c)?
            }
            Method::GTurbo | Method::FullResolution => {
                let dcfg = DetectorConfig { v_floor: cfg.v_floor, ..DetectorConfig::new(c.clone(), cfg.t_det) };
                let det = detect(&obs, &h_bar, sigma2_bar, plan, dft, &dcfg, &known)?;
                out.clamps.merge(&det.clamps);
                for (acc, (x, _)) in out.bit_errors.iter_mut().zip(&det.snapshots) {
                    *acc += count(&hard_decisions(x, &h_bar, c));
                }
                compute_llr(&det.x_pri_d, det.v_pri, &h_bar, c)?
            }
        };
        out.bits += per_vec as u64;
        llrs.extend_from_slice(&llr[..used * bps]);
    }
    if stage == Stage::Detect {
        return Ok(out);
    }

    for (l, info) in scn.coding.split_llrs(&llrs)?.iter().zip(truth.info.chunks(scn.coding.k)) {
        let decoded = scn.codec.decode(l)?;
        let e = decoded.iter().zip(info).filter(|(a, b)| a != b).count() as u64;
        out.info_errors += e;
        out.info_bits += info.len() as u64;
        out.codewords += 1;
        out.codewords_failed += u64::from(e > 0);
    }
    Ok(out)
}

/// Per-trial result; rates lie in `[0, 1]`, traces hold one entry per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub trial: u64,
    /// Linear NMSE after each estimator iteration.
    pub nmse_trace: Vec<f64>,
    /// Uncoded BER after each detector iteration (empty when not detected).
    pub ber_trace: Vec<f64>,
    pub coded_ber: Option<f64>,
    pub per: Option<f64>,
    /// Synchronization error in samples, when measured.
    pub sto: Option<i64>,
    pub clamps: ClampCounters,
}

impl TrialMetrics {
    pub fn nmse(&self) -> Option<f64> {
        self.nmse_trace.last().copied()
    }

    pub fn uncoded_ber(&self) -> Option<f64> {
        self.ber_trace.last().copied()
    }

    /// Combines the outcomes of several slots by pooling error counts.
    pub fn from_outcomes(trial: u64, outcomes: &[SlotOutcome], sto: Option<i64>) -> Self {
        let mut clamps = ClampCounters::default();
        outcomes.iter().for_each(|o| clamps.merge(&o.clamps));
        let energy: f64 = outcomes.iter().map(|o| o.h_energy).sum();
        let iters = outcomes.first().map_or(0, |o| o.h_err.len());
        let nmse_trace = (0..iters).map(|i| outcomes.iter().map(|o| o.h_err[i]).sum::<f64>() / energy).collect();
        let bits: u64 = outcomes.iter().map(|o| o.bits).sum();
        let ber_trace = if bits == 0 {
            Vec::new()
        } else {
            let iters = outcomes[0].bit_errors.len();
            (0..iters).map(|i| outcomes.iter().map(|o| o.bit_errors[i]).sum::<u64>() as f64 / bits as f64).collect()
        };
        let info_bits: u64 = outcomes.iter().map(|o| o.info_bits).sum();
        let (coded_ber, per) = if info_bits == 0 {
            (None, None)
        } else {
            let errors: u64 = outcomes.iter().map(|o| o.info_errors).sum();
            let failed: u64 = outcomes.iter().map(|o| o.codewords_failed).sum();
            let cws: u64 = outcomes.iter().map(|o| o.codewords).sum();
            (Some(errors as f64 / info_bits as f64), Some(failed as f64 / cws as f64))
        };
        Self { trial, nmse_trace, ber_trace, coded_ber, per, sto, clamps }
    }
}

/// Transmitted slot of one trial and its received samples.
struct SlotDraw {
    h_d: Vec<Complex64>,
    info: Vec<u8>,
    coded: Vec<u8>,
    rx: Vec<Vec<Complex64>>,
    power: PowerReport,
}

fn draw_slot(scn: &Scenario, snr_db: f64, trial: u64, stage: Stage) -> Result<SlotDraw> {
    let cfg = &scn.cfg;
    let (plan, dft) = (&scn.plan, &scn.dft);
    let n = plan.n();
    let mut rng = RandomSource::new(cfg.seed, streams::CHANNEL).for_trial(trial);
    let h = freq_response(&draw_channel(&mut rng, &cfg.taps_db)?, dft)?;
    let h_d = plan.extract(&h)?;

    let (info, coded, symbols) = if stage == Stage::Estimate {
        (Vec::new(), Vec::new(), Vec::new())
    } else {
        let info = RandomSource::new(cfg.seed, streams::PAYLOAD).for_trial(trial).bits(scn.coding.info_bits());
        let (coded, symbols) = scn.coding.encode(&scn.codec, &info)?;
        (info, coded, symbols)
    };

    let transmit = |s: &[Complex64]| -> Result<Vec<Complex64>> {
        let x: Vec<Complex64> = h_d.iter().zip(s).map(|(h, s)| h * s).collect();
        dft.inverse(&subcarrier_map(&x, plan)?)
    };
    let mut rx = vec![transmit(&scn.pilot.p_d)?];
    for s in &symbols {
        rx.push(transmit(s)?);
    }

    // Exact mean power of the noiseless samples for this realization.
    let p_sig = norm_sqr(&h_d) / n as f64;
    let sigma2 = p_sig / 10f64.powf(snr_db / 10.0);
    let mut noise = RandomSource::new(cfg.seed, streams::NOISE).for_trial(trial);
    for y in rx.iter_mut() {
        apply_awgn(y, sigma2, &mut noise)?;
    }
    let p_r = p_sig + sigma2;
    let power = if cfg.mismatch {
        let mut m = RandomSource::new(cfg.seed, streams::MISMATCH).for_trial(trial);
        let r = cfg.mismatch_range;
        let (e1, e2) = (m.uniform_range(-r, r), m.uniform_range(-r, r));
        PowerReport::new(p_r / (1.0 + e1), sigma2 * (1.0 + e2))?
    } else {
        PowerReport::new(p_r, sigma2)?
    };
    Ok(SlotDraw { h_d, info, coded, rx, power })
}

/// Runs trial `trial` of one (SNR, B, method) cell. Identical inputs give
/// identical metrics: every random draw is keyed on `(seed, stream, trial)`.
pub fn run_trial(scn: &Scenario, snr_db: f64, bits: u32, method: Method, trial: u64) -> Result<TrialMetrics> {
    let stage = Stage::for_kind(scn.cfg.kind);
    let d = draw_slot(scn, snr_db, trial, stage)?;
    let samples = SlotSamples { pilot: &d.rx[0], data: d.rx[1..].iter().map(|v| Some(v.as_slice())).collect() };
    let samples = if stage == Stage::Estimate {
        SlotSamples { data: vec![None; DATA_SYMBOLS_PER_SLOT], ..samples }
    } else {
        samples
    };
    let truth = SlotTruth { h_d: &d.h_d, coded: &d.coded, info: &d.info };
    let out = receive_slot(scn, &samples, &truth, &scn.weights, &d.power, bits, method, stage)?;
    Ok(TrialMetrics::from_outcomes(trial, &[out], None))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> Scenario {
        let cfg = ExperimentConfig {
            kind,
            n: 256,
            n_d: 148,
            t_est: 4,
            t_det: 4,
            rate: crate::coding::CodeRate::Third,
            ..Default::default()
        };
        Scenario::new(&cfg).unwrap()
    }

    #[test]
    fn deterministic_per_trial() {
        let scn = small(ExperimentKind::BerVsSnr);
        let a = run_trial(&scn, 10.0, 2, Method::GTurbo, 3).unwrap();
        let b = run_trial(&scn, 10.0, 2, Method::GTurbo, 3).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&scn, 10.0, 2, Method::GTurbo, 4).unwrap();
        assert_ne!(a.nmse_trace, c.nmse_trace);
    }

    #[test]
    fn clean_high_resolution_link_is_error_free() {
        let scn = small(ExperimentKind::BerVsSnr);
        for t in 0..3 {
            let m = run_trial(&scn, 30.0, 5, Method::GTurbo, t).unwrap();
            assert_eq!(m.coded_ber, Some(0.0));
            assert_eq!(m.per, Some(0.0));
            assert!(m.nmse().unwrap() < 0.01);
            assert_eq!(m.ber_trace.len(), 4);
        }
    }

    #[test]
    fn rates_are_bounded_for_all_methods() {
        let scn = small(ExperimentKind::BerVsSnr);
        for method in [Method::GTurbo, Method::Conventional, Method::FullResolution] {
            let m = run_trial(&scn, 4.0, 1, method, 0).unwrap();
            assert!(m.ber_trace.iter().chain(m.coded_ber.iter()).chain(m.per.iter()).all(|r| (0.0..=1.0).contains(r)));
            assert!(m.nmse_trace.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn estimate_stage_skips_detection() {
        let scn = small(ExperimentKind::NmseVsIter);
        let m = run_trial(&scn, 12.0, 1, Method::GTurbo, 0).unwrap();
        assert_eq!(m.nmse_trace.len(), 4);
        assert!(m.ber_trace.is_empty() && m.coded_ber.is_none());
    }
}
