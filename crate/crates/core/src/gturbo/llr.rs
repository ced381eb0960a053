use crate::coding::LlrVector;
use crate::error::{check_len, invalid, Result};
use crate::modem::Constellation;
use crate::numerics::Complex64;

/// Max-log LLRs of one equalized symbol `x̃` with noise variance `beta`,
/// appended to `out`; positive values favour bit 0.
pub fn llr_equalized(x: Complex64, beta: f64, c: &Constellation, out: &mut Vec<f64>) {
    let bps = c.bits_per_symbol();
    let mut d0 = [f64::INFINITY; 4];
    let mut d1 = [f64::INFINITY; 4];
    for (label, s) in c.points().iter().enumerate() {
        let d = (x - s).norm_sqr();
        for i in 0..bps {
            if c.label_bit(label, i) == 0 {
                d0[i] = d0[i].min(d);
            } else {
                d1[i] = d1[i].min(d);
            }
        }
    }
    out.extend((0..bps).map(|i| (d1[i] - d0[i]) / beta));
}

/// Per-bit LLRs for every data subcarrier from the detector's final
/// Module B input; a zero channel entry yields zero LLRs (erasure).
pub fn compute_llr(x_pri_d: &[Complex64], v_pri: f64, h_bar_d: &[Complex64], c: &Constellation) -> Result<LlrVector> {
    check_len(x_pri_d.len(), h_bar_d.len())?;
    if !(v_pri > 0.0) {
        return Err(invalid(format!("variance must be positive, got {v_pri}")));
    }
    let bps = c.bits_per_symbol();
    let mut out = Vec::with_capacity(x_pri_d.len() * bps);
    for (x, h) in x_pri_d.iter().zip(h_bar_d) {
        let g = h.norm_sqr();
        if g == 0.0 {
            out.extend(std::iter::repeat_n(0.0, bps));
        } else {
            llr_equalized(x / h, v_pri / g, c, &mut out);
        }
    }
    Ok(out)
}

/// Nearest-point hard decisions on `x_pri/h̄`.
pub fn hard_decisions(x_pri_d: &[Complex64], h_bar_d: &[Complex64], c: &Constellation) -> Vec<u8> {
    let eq: Vec<Complex64> = x_pri_d
        .iter()
        .zip(h_bar_d)
        .map(|(x, h)| if h.norm_sqr() == 0.0 { Complex64::new(0.0, 0.0) } else { x / h })
        .collect();
    c.hard_bits(&eq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn qpsk_reference_point() {
        let c = Constellation::qpsk();
        let one = Complex64::new(1.0, 0.0);
        let llr = compute_llr(&[Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)], 1.0, &[one], &c).unwrap();
        assert!((llr[0] - 2.0).abs() < 1e-12 && (llr[1] - 2.0).abs() < 1e-12);
        let half = compute_llr(&[Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)], 2.0, &[one], &c).unwrap();
        assert!((half[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equidistant_is_zero_and_zero_channel_erases() {
        let c = Constellation::qam16();
        let llr = compute_llr(&[Complex64::new(0.0, 0.0)], 0.3, &[Complex64::new(1.0, 0.0)], &c).unwrap();
        assert!(llr[0].abs() < 1e-12 && llr[1].abs() < 1e-12);
        let z = compute_llr(&[Complex64::new(0.3, 0.1)], 0.3, &[Complex64::new(0.0, 0.0)], &c).unwrap();
        assert_eq!(z, vec![0.0; 4]);
        assert!(compute_llr(&[Complex64::new(0.3, 0.1)], 0.0, &[Complex64::new(1.0, 0.0)], &c).is_err());
    }

    #[test]
    fn signs_follow_hard_decisions() {
        let c = Constellation::qam16();
        let h = Complex64::from_polar(0.7, 1.2);
        for (label, s) in c.points().iter().enumerate() {
            let x = h * (s + Complex64::new(0.05, -0.04));
            let llr = compute_llr(&[x], 0.1, &[h], &c).unwrap();
            for (i, l) in llr.iter().enumerate() {
                assert_eq!((*l < 0.0) as u8, c.label_bit(label, i));
            }
            assert_eq!(hard_decisions(&[x], &[h], &c), (0..4).map(|i| c.label_bit(label, i)).collect::<Vec<_>>());
        }
    }
}
