//! Quick oracle suites run by `qofdm selftest`.

use crate::coding::{CodeRate, TurboCodeSpec, TurboCodec};
use crate::frontend::{delta_b, gaussian_mse, make_quantizer, optimal_step};
use crate::gturbo::scalar_posterior;
use crate::numerics::{quantized_posterior_quadrature, streams, RandomSource, Rng64};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
}

/// One random Module A case: prior mean/variance, noise variance and a
/// quantizer cell.
pub fn random_posterior_case(rng: &mut Rng64) -> (f64, f64, f64, f64, f64) {
    let bits = 1 + rng.index(5) as u32;
    let p_q = 10f64.powf(rng.uniform_range(-1.0, 0.5));
    let q = make_quantizer(bits, p_q).expect("valid quantizer");
    let cell = rng.index(1 << bits);
    let (l, u) = (q.thresholds()[cell], q.thresholds()[cell + 1]);
    let m = rng.uniform_range(-2.0, 2.0) * p_q.sqrt();
    let v = 10f64.powf(rng.uniform_range(-3.0, 0.5));
    let s2 = 10f64.powf(rng.uniform_range(-4.0, 0.0));
    (m, v, s2, l, u)
}

/// Largest relative deviation between kernel and quadrature; the mean is
/// scaled by `max(|mean|, sd)` so that near-zero means are not over-weighted.
pub fn posterior_deviation(case: (f64, f64, f64, f64, f64)) -> (f64, f64) {
    let (m, v, s2, l, u) = case;
    let (km, kv) = scalar_posterior(m, v, s2, l, u);
    let (qm, qv) = quantized_posterior_quadrature(m, v, s2, l, u);
    ((km - qm).abs() / qm.abs().max(qv.sqrt()), (kv - qv).abs() / qv)
}

fn quadrature_suite(cases: usize) -> SuiteResult {
    let mut rng = RandomSource::new(0xA11CE, streams::TEST).for_trial(0);
    let failed = (0..cases)
        .filter(|_| {
            let (dm, dv) = posterior_deviation(random_posterior_case(&mut rng));
            !(dm < 1e-8 && dv < 1e-8)
        })
        .count();
    SuiteResult { name: "module-a-vs-quadrature", passed: cases - failed, failed }
}

fn quantizer_suite() -> SuiteResult {
    let mut r = SuiteResult { name: "quantizer-step-optimality", passed: 0, failed: 0 };
    for b in 1..=5 {
        let ok = match (delta_b(b), optimal_step(b)) {
            (Some(d), Ok((_, best))) => gaussian_mse(b, d).is_ok_and(|mse| mse <= best * 1.02),
            _ => false,
        };
        if ok {
            r.passed += 1;
        } else {
            r.failed += 1;
        }
    }
    r
}

fn codec_suite() -> SuiteResult {
    let mut r = SuiteResult { name: "turbo-noiseless-loopback", passed: 0, failed: 0 };
    let mut rng = RandomSource::new(0xC0DEC, streams::TEST).for_trial(0);
    for (k, rate) in [(40, CodeRate::Third), (1024, CodeRate::Half), (3520, CodeRate::Half), (6144, CodeRate::Third)] {
        let ok = (|| {
            let codec = TurboCodec::new(TurboCodeSpec::new(k, rate))?;
            let info = rng.bits(k);
            let llr: Vec<f64> = codec.encode(&info)?.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect();
            Ok::<_, crate::Error>(codec.decode(&llr)? == info)
        })()
        .unwrap_or(false);
        if ok {
            r.passed += 1;
        } else {
            r.failed += 1;
        }
    }
    r
}

pub fn run_selftest(quadrature_cases: usize) -> Vec<SuiteResult> {
    vec![quadrature_suite(quadrature_cases), quantizer_suite(), codec_suite()]
}
