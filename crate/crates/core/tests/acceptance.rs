//! End-to-end acceptance checks. Each test prints one PASS/FAIL line and
//! asserts at the stated tolerance.

use std::io::Write;
use std::time::Instant;

use qofdm::baseline::{conventional_detect, conventional_estimate, conventional_variance};
use qofdm::channel::{apply_awgn, draw_channel, freq_response, DEFAULT_PROFILE_DB};
use qofdm::coding::{CodeRate, TurboCodeSpec, TurboCodec};
use qofdm::frontend::{delta_b, make_quantizer, optimal_step, quantize_complex, PowerReport, QuantizerSpec};
use qofdm::gturbo::{
    alpha_coefficient, compute_llr, detect, estimate_channel, lmmse_extrinsic, module_a, AlphaRule, ClampCounters,
    DetectorConfig, EstimatorConfig, LmmseWeights, Observation,
};
use qofdm::harness::{
    frame_truth, posterior_deviation, random_posterior_case, run_cell, run_sweep, tabulate, to_db, write_csv, Cell,
    ExperimentConfig, ExperimentKind, Method, NormalizeMode, Scenario,
};
use qofdm::modem::{subcarrier_map, Constellation, SubcarrierPlan};
use qofdm::numerics::{norm_sqr, streams, Complex64, Dft, RandomSource};
use qofdm::parallel::{with_threads, ExecutionMode};

fn report(id: u32, what: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    // Written straight to the process stream so it survives output capture.
    let _ = writeln!(std::io::stderr(), "[{id}] {verdict} {what}: {detail}");
}

fn nmse_cfg(
    bits: u32,
    snr: &[f64],
    methods: Vec<Method>,
    mismatch: bool,
    normalize: NormalizeMode,
) -> ExperimentConfig {
    ExperimentConfig {
        kind: ExperimentKind::NmseVsIter,
        bits: vec![bits],
        snr_db: snr.to_vec(),
        trials: 200,
        methods,
        mismatch,
        normalize,
        ..Default::default()
    }
}

fn cell(cells: &[Cell], snr: f64, bits: u32, method: Method) -> &Cell {
    cells.iter().find(|c| c.snr_db == snr && c.bits == bits && c.method == method).expect("cell present")
}

fn no_failures(cells: &[Cell]) -> bool {
    cells.iter().all(|c| c.failed.is_empty())
}

#[test]
fn posterior_kernel_matches_quadrature() {
    let start = Instant::now();
    let mut rng = RandomSource::new(0xACCE97, streams::TEST).for_trial(0);
    let (mut worst_m, mut worst_v, mut bad) = (0.0f64, 0.0f64, 0);
    for _ in 0..10_000 {
        let (dm, dv) = posterior_deviation(random_posterior_case(&mut rng));
        worst_m = worst_m.max(dm);
        worst_v = worst_v.max(dv);
        bad += usize::from(!(dm < 1e-8 && dv < 1e-8));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = bad == 0 && secs < 60.0;
    report(
        1,
        "Module A vs quadrature, 1e4 cases",
        pass,
        &format!("worst rel. mean {worst_m:.2e}, variance {worst_v:.2e}, {bad} over 1e-8, {secs:.1} s"),
    );
    assert!(pass);
}

#[test]
fn table_steps_are_near_optimal() {
    let start = Instant::now();
    let samples = 2_000_000;
    let mut details = Vec::new();
    let mut pass = true;
    for b in 1..=5 {
        let q = QuantizerSpec::with_step(b, delta_b(b).unwrap()).unwrap();
        let (_, best) = optimal_step(b).unwrap();
        let mut rng = RandomSource::new(0x0A5, streams::TEST).for_trial(b as u64);
        let mse = (0..samples)
            .map(|_| {
                let x = rng.normal();
                (x - q.quantize_real(x)).powi(2)
            })
            .sum::<f64>()
            / samples as f64;
        let rel = mse / best - 1.0;
        pass &= rel.abs() <= 0.02;
        details.push(format!("B={b} {:+.2}%", 100.0 * rel));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    report(2, "quantizer MSE at table step vs optimum", pass, &format!("{} ({secs:.1} s)", details.join(", ")));
    assert!(pass);
}

#[test]
fn estimator_convergence() {
    let mut pass_a = true;
    let mut detail_a = Vec::new();
    for mismatch in [false, true] {
        for normalize in [NormalizeMode::Off, NormalizeMode::On] {
            let cfg = nmse_cfg(2, &[12.0], vec![Method::GTurbo], mismatch, normalize);
            let cells = run_sweep(&cfg, ExecutionMode::Parallel).unwrap();
            let t: Vec<f64> = cells[0].nmse_trace().into_iter().map(to_db).collect();
            let ok = no_failures(&cells) && (t[4] - t[9]).abs() < 0.5 && t[4] <= t[0];
            pass_a &= ok;
            detail_a.push(format!(
                "mismatch={mismatch} normalize={normalize:?}: it1 {:.2} it5 {:.2} it10 {:.2} dB",
                t[0], t[4], t[9]
            ));
        }
    }
    report(3, "B=2 NMSE settles by iteration 5", pass_a, &detail_a.join("; "));

    let cfg = nmse_cfg(1, &[12.0], vec![Method::GTurbo], false, NormalizeMode::Off);
    let cells = run_sweep(&cfg, ExecutionMode::Parallel).unwrap();
    let t: Vec<f64> = cells[0].nmse_trace().into_iter().map(to_db).collect();
    let (imin, min) =
        t.iter().copied().enumerate().fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a });
    let pass_b = no_failures(&cells) && imin < 9 && t[9] >= min + 1.0;
    report(
        3,
        "B=1 unnormalized NMSE dips then rises",
        pass_b,
        &format!("min {min:.2} dB at iteration {}, iteration 10 {:.2} dB (+{:.2} dB)", imin + 1, t[9], t[9] - min),
    );
    assert!(pass_a && pass_b);
}

#[test]
fn estimator_beats_baselines() {
    let methods = vec![Method::GTurbo, Method::Conventional, Method::FullResolution];
    let cfg = ExperimentConfig {
        kind: ExperimentKind::NmseVsSnr,
        ..nmse_cfg(1, &[8.0, 12.0], methods, true, NormalizeMode::Auto)
    };
    let cells = run_sweep(&cfg, ExecutionMode::Parallel).unwrap();
    let mut pass_a = no_failures(&cells);
    let mut detail = Vec::new();
    for snr in [8.0, 12.0] {
        let g = to_db(cell(&cells, snr, 1, Method::GTurbo).nmse().unwrap());
        let c = to_db(cell(&cells, snr, 1, Method::Conventional).nmse().unwrap());
        pass_a &= g <= c - 2.0;
        detail.push(format!("{snr} dB: gturbo {g:.2}, conventional {c:.2}"));
    }
    report(4, "B=1 GTurbo NMSE >= 2 dB below conventional", pass_a, &detail.join("; "));

    let cfg = ExperimentConfig { bits: vec![2], snr_db: vec![12.0], ..cfg };
    let cells = run_sweep(&cfg, ExecutionMode::Parallel).unwrap();
    let g = to_db(cell(&cells, 12.0, 2, Method::GTurbo).nmse().unwrap());
    let f = to_db(cell(&cells, 12.0, 2, Method::FullResolution).nmse().unwrap());
    let pass_b = no_failures(&cells) && g - f <= 3.0;
    report(
        4,
        "B=2 GTurbo within 3 dB of full-resolution LMMSE at 12 dB",
        pass_b,
        &format!("gturbo {g:.2}, full {f:.2}, gap {:.2} dB", g - f),
    );
    assert!(pass_a && pass_b);
}

/// Mean and standard error of the per-trial BER at each detector iteration.
fn ber_stats(c: &Cell) -> (Vec<f64>, Vec<f64>) {
    let n = c.metrics.len() as f64;
    let iters = c.metrics.iter().map(|m| m.ber_trace.len()).min().unwrap_or(0);
    (0..iters)
        .map(|i| {
            let v: Vec<f64> = c.metrics.iter().map(|m| m.ber_trace[i]).collect();
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (mean, (var / n).sqrt())
        })
        .unzip()
}

#[test]
fn detector_convergence() {
    let mut pass = true;
    let mut lines = Vec::new();
    for (bits, modulation) in [(1, 4), (2, 16)] {
        let run = |mismatch: bool| {
            let cfg = ExperimentConfig {
                kind: ExperimentKind::BerVsIter,
                bits: vec![bits],
                modulation,
                snr_db: vec![6.0, 14.0],
                trials: 100,
                methods: vec![Method::GTurbo],
                mismatch,
                ..Default::default()
            };
            run_sweep(&cfg, ExecutionMode::Parallel).unwrap()
        };
        let (perfect, mismatched) = (run(false), run(true));
        pass &= no_failures(&perfect) && no_failures(&mismatched);
        for snr in [6.0, 14.0] {
            let (p, se) = ber_stats(cell(&perfect, snr, bits, Method::GTurbo));
            let (m, _) = ber_stats(cell(&mismatched, snr, bits, Method::GTurbo));
            let monotone = (0..4).all(|i| p[i + 1] <= p[i] + 2.0 * se[i + 1]);
            let stable = (p[9] - p[4]).abs() <= 2.0 * se[4];
            let ratio = m[9] / p[9];
            pass &= monotone && stable && ratio <= 1.5;
            lines.push(format!(
                "B={bits}/{modulation}-QAM {snr} dB: it1 {:.4} it5 {:.4} it10 {:.4} (±{:.4}), mismatch/perfect {ratio:.3}",
                p[0], p[4], p[9], se[4]
            ));
        }
    }
    report(5, "detector BER non-increasing, stable, mismatch-robust", pass, &lines.join("; "));
    assert!(pass);
}

#[test]
fn coded_ber_ordering() {
    let mut pass = true;
    let mut lines = Vec::new();
    for (bits, modulation) in [(1, 4), (2, 16)] {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::BerVsSnr,
            bits: vec![bits],
            modulation,
            rate: CodeRate::Half,
            snr_db: vec![6.0, 8.0, 10.0, 12.0, 14.0],
            trials: 200,
            methods: vec![Method::GTurbo, Method::Conventional],
            mismatch: true,
            ..Default::default()
        };
        let cells = run_sweep(&cfg, ExecutionMode::Parallel).unwrap();
        pass &= no_failures(&cells);
        let mut pts = Vec::new();
        for &snr in &cfg.snr_db {
            let g = cell(&cells, snr, bits, Method::GTurbo).coded_ber().unwrap();
            let c = cell(&cells, snr, bits, Method::Conventional).coded_ber().unwrap();
            pass &= g < c;
            pts.push(format!("{snr}:{g:.2e}<{c:.2e}"));
        }
        let top = cell(&cells, 14.0, bits, Method::GTurbo).coded_ber().unwrap();
        pass &= top < 1e-3;
        lines.push(format!("B={bits}/{modulation}-QAM [{}], 14 dB gturbo {top:.3e}", pts.join(" ")));
    }
    report(6, "coded BER: GTurbo below conventional, < 1e-3 at 14 dB", pass, &lines.join("; "));
    assert!(pass);
}

#[test]
fn synchronization_offset_distribution() {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::SyncSto,
        bits: vec![1, 2],
        snr_db: vec![15.0],
        trials: 1000,
        ..Default::default()
    };
    let cells = run_sweep(&cfg, ExecutionMode::Parallel).unwrap();
    let mut pass = no_failures(&cells);
    let mut lines = Vec::new();
    for (bits, floor) in [(1, 0.45), (2, 0.50)] {
        let c = cell(&cells, 15.0, bits, Method::GTurbo);
        let p0 = c.sto_rate(|s| s == 0).unwrap();
        let p4 = c.sto_rate(|s| s.abs() <= 4).unwrap();
        pass &= c.metrics.len() >= 1000 && p0 >= floor && p4 >= 0.85;
        lines.push(format!("B={bits}: P(STO=0) {p0:.3}, P(|STO|<=4) {p4:.3} over {} frames", c.metrics.len()));
    }
    report(7, "synchronization at 15 dB", pass, &lines.join("; "));
    assert!(pass);
}

struct Link {
    plan: SubcarrierPlan,
    dft: Dft,
    p_d: Vec<Complex64>,
    h_d: Vec<Complex64>,
    y: Vec<Complex64>,
    power: PowerReport,
}

fn link(n: usize, n_d: usize, snr_db: f64, trial: u64) -> Link {
    let plan = SubcarrierPlan::new(n, n_d).unwrap();
    let dft = Dft::new(n).unwrap();
    let mut rng = RandomSource::new(0x1417, streams::TEST).for_trial(trial);
    let h_d =
        plan.extract(&freq_response(&draw_channel(&mut rng, &DEFAULT_PROFILE_DB).unwrap(), &dft).unwrap()).unwrap();
    let qpsk = Constellation::qpsk();
    let p_d: Vec<Complex64> = (0..n_d).map(|_| qpsk.points()[rng.index(4)]).collect();
    let x: Vec<Complex64> = h_d.iter().zip(&p_d).map(|(h, p)| h * p).collect();
    let mut y = dft.inverse(&subcarrier_map(&x, &plan).unwrap()).unwrap();
    let p_sig = norm_sqr(&h_d) / n as f64;
    let sigma2 = p_sig / 10f64.powf(snr_db / 10.0);
    apply_awgn(&mut y, sigma2, &mut rng).unwrap();
    Link { plan, dft, p_d, h_d, y, power: PowerReport::new(p_sig + sigma2, sigma2).unwrap() }
}

fn quantized(l: &Link, bits: u32) -> (Vec<Complex64>, Observation) {
    let q = make_quantizer(bits, l.power.quantizer_power()).unwrap();
    let sg = l.power.g_agc.sqrt();
    let scaled: Vec<Complex64> = l.y.iter().map(|v| v * sg).collect();
    let qv = quantize_complex(&scaled, &q).unwrap();
    let obs = Observation::quantized(qv.clone(), &q).unwrap();
    (qv, obs)
}

#[test]
fn structural_invariants() {
    let start = Instant::now();
    let mut checks: Vec<(&str, bool, String)> = Vec::new();

    // Extrinsic orthogonality at iteration 1.
    let w = LmmseWeights::compute(&SubcarrierPlan::new(2048, 1186).unwrap(), 4, 1e-5).unwrap();
    let (mut cross, mut e_pri, mut e_ext) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for t in 0..100 {
        let l = link(2048, 1186, 12.0, t);
        let (_, obs) = quantized(&l, 1 + (t % 2) as u32);
        let sg = l.power.g_agc.sqrt();
        let p_bar: Vec<Complex64> = l.p_d.iter().map(|p| p * sg).collect();
        let s2 = l.power.g_agc * l.power.sigma2_hat;
        let zero = vec![Complex64::new(0.0, 0.0); 2048];
        let a = module_a(&obs, &zero, 1.0 - s2, s2, &l.dft, &mut ClampCounters::default()).unwrap();
        let x_pri = l.plan.extract(&a.x_ext).unwrap();
        let ls: Vec<Complex64> = x_pri.iter().zip(&p_bar).map(|(x, p)| x / p).collect();
        let h_hat = w.apply(&ls).unwrap();
        let alpha = alpha_coefficient(AlphaRule::DiagonalMean, &w, &p_bar);
        let (x_ext, _) = lmmse_extrinsic(&x_pri, &h_hat, &p_bar, alpha);
        for ((xp, xe), (h, p)) in x_pri.iter().zip(&x_ext).zip(l.h_d.iter().zip(&p_bar)) {
            let x = h * p;
            cross += (xp - x).conj() * (xe - x);
            e_pri += (xp - x).norm_sqr();
            e_ext += (xe - x).norm_sqr();
        }
    }
    let corr = cross.norm() / (e_pri * e_ext).sqrt();
    checks.push(("extrinsic orthogonality", corr < 0.05, format!("|corr| {corr:.4} over 100 realizations")));

    // Guard bands stay empty in every transmitted symbol.
    let scn = Scenario::new(&ExperimentConfig { kind: ExperimentKind::EndToEndFrame, ..Default::default() }).unwrap();
    let truth = frame_truth(&scn, 0).unwrap();
    let mut used = scn.plan.is_data_bin();
    for &b in scn.plan.pss_bins() {
        used[b] = true;
    }
    let mut worst = 0.0f64;
    for e in &truth.frame.ledger.layout {
        let core = &truth.frame.samples[e.core_offset()..e.core_offset() + 2048];
        let f = scn.dft.forward(core).unwrap();
        let total = norm_sqr(&f).max(f64::MIN_POSITIVE);
        let guard: f64 = f.iter().zip(&used).filter(|(_, u)| !**u).map(|(v, _)| v.norm_sqr()).sum();
        worst = worst.max(guard / total);
    }
    checks.push(("guard-band zeros", worst < 1e-20, format!("worst guard/total energy {worst:.1e}")));

    // Frame length.
    let len = truth.frame.samples.len();
    checks.push(("frame length", len == 307_200, format!("{len} samples")));

    // Single bypassed iteration equals the conventional receiver.
    let mut exact = true;
    for t in 0..4 {
        let l = link(512, 300, 10.0, 100 + t);
        let bits = 1 + (t % 2) as u32;
        let wl = LmmseWeights::compute(&l.plan, 4, 1e-5).unwrap();
        let (qv, obs) = quantized(&l, bits);
        let conv = conventional_estimate(&qv, &l.p_d, l.power.g_agc, &l.plan, &l.dft, &wl).unwrap();
        let cfg = EstimatorConfig { t_max: 1, bypass_module_a: true, ..Default::default() };
        let gt = estimate_channel(&obs, &l.p_d, &l.plan, &l.dft, &l.power, &wl, &cfg).unwrap();
        let s2 = l.power.g_agc * l.power.sigma2_hat;
        let c = Constellation::qpsk();
        let var = conventional_variance(s2, Some(bits), l.power.quantizer_power());
        let llr_c = conventional_detect(&qv, &conv.h_bar, var, &l.plan, &l.dft, &c).unwrap();
        let dcfg = DetectorConfig { bypass_variance: Some(var), ..DetectorConfig::new(c.clone(), 1) };
        let det = detect(&obs, &gt.h_bar, s2, &l.plan, &l.dft, &dcfg, &[]).unwrap();
        let llr_g = compute_llr(&det.x_pri_d, det.v_pri, &gt.h_bar, &c).unwrap();
        exact &= conv.h_hat == gt.h_hat && conv.h_bar == gt.h_bar && llr_c == llr_g;
    }
    checks.push(("bypassed GTurbo(T=1) equals conventional", exact, "estimates and LLRs bit-identical".into()));

    // Turbo loopback.
    let mut rng = RandomSource::new(0x7B0, streams::TEST).for_trial(0);
    let mut loop_ok = true;
    for (k, rate) in [(40, CodeRate::Third), (1056, CodeRate::Half), (6144, CodeRate::Half)] {
        let codec = TurboCodec::new(TurboCodeSpec::new(k, rate)).unwrap();
        let info = rng.bits(k);
        let llr: Vec<f64> = codec.encode(&info).unwrap().iter().map(|&b| if b == 0 { 10.0 } else { -10.0 }).collect();
        loop_ok &= codec.decode(&llr).unwrap() == info;
    }
    checks.push(("turbo noiseless loopback", loop_ok, "K = 40, 1056, 6144".into()));

    // Thread-count determinism.
    let cfg = ExperimentConfig {
        kind: ExperimentKind::BerVsSnr,
        n: 256,
        n_d: 148,
        bits: vec![1, 2],
        snr_db: vec![8.0],
        trials: 12,
        t_est: 3,
        t_det: 3,
        methods: vec![Method::GTurbo, Method::Conventional],
        ..Default::default()
    };
    let csv = |threads: Option<usize>, mode| {
        let cells = with_threads(threads, || run_sweep(&cfg, mode)).unwrap().unwrap();
        let mut out = Vec::new();
        write_csv(&tabulate(&cfg, &cells), &mut out).unwrap();
        out
    };
    let reference = csv(Some(1), ExecutionMode::Sequential);
    let same = [Some(1), Some(2), Some(4)].into_iter().all(|t| csv(t, ExecutionMode::Parallel) == reference);
    checks.push(("thread-count determinism", same, "1, 2, 4 threads and sequential agree byte-for-byte".into()));

    let secs = start.elapsed().as_secs_f64();
    let pass = checks.iter().all(|c| c.1) && secs < 120.0;
    let detail: Vec<String> =
        checks.iter().map(|(n, ok, d)| format!("{n} {} ({d})", if *ok { "ok" } else { "FAILED" })).collect();
    report(8, "structural invariants", pass, &format!("{}; {secs:.1} s", detail.join("; ")));
    assert!(pass);
}

#[test]
fn frame_receiver_runs_end_to_end() {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::EndToEndFrame,
        n: 256,
        n_d: 148,
        bits: vec![2],
        snr_db: vec![20.0],
        trials: 4,
        methods: vec![Method::GTurbo],
        ..Default::default()
    };
    let scn = Scenario::new(&cfg).unwrap();
    let c = run_cell(&scn, 20.0, 2, Method::GTurbo, ExecutionMode::Parallel);
    assert!(c.failed.is_empty(), "{:?}", c.failed);
    assert!(c.per().unwrap() <= 0.1, "PER {:?}", c.per());
}
