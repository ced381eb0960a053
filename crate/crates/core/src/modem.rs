//! Constellation mapping, subcarrier mapping and CP-OFDM modulation.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{check_len, invalid, Result};
use crate::numerics::{Complex64, Dft, ZERO};

/// Square QAM constellation with unit average energy and a Gray labelling.
///
/// Bit `b0` selects the sign of the in-phase part and `b1` the sign of the
/// quadrature part (0 → positive). For 16-QAM, `b2`/`b3` select the inner
/// (0) or outer (1) amplitude of the in-phase/quadrature part, so
/// `0000 → (1+j)/√10` and `0011 → (3+3j)/√10`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self> {
        let points = match order {
            4 => (0..4).map(|l| qpsk_point(l as u8 >> 1 & 1, l as u8 & 1)).collect(),
            16 => (0..16).map(qam16_point_from_label).collect(),
            _ => return Err(invalid(format!("unsupported modulation order {order}"))),
        };
        Ok(Self { order, points })
    }

    pub fn qpsk() -> Self {
        Self::new(4).expect("4-QAM")
    }

    pub fn qam16() -> Self {
        Self::new(16).expect("16-QAM")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    /// Points indexed by label; the label's most significant bit is `b0`.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bit `i` (0 = first mapped bit) of the label of point `label`.
    #[inline]
    pub fn label_bit(&self, label: usize, i: usize) -> u8 {
        ((label >> (self.bits_per_symbol() - 1 - i)) & 1) as u8
    }

    pub fn map_symbol(&self, bits: &[u8]) -> Complex64 {
        let label = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1));
        self.points[label]
    }

    /// Label of the nearest constellation point.
    pub fn nearest(&self, x: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (l, p) in self.points.iter().enumerate() {
            let d = (x - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = l;
            }
        }
        best
    }

    /// Hard-decision bits for a vector of equalized symbols.
    pub fn hard_bits(&self, symbols: &[Complex64]) -> Vec<u8> {
        let m = self.bits_per_symbol();
        let mut out = Vec::with_capacity(symbols.len() * m);
        for &x in symbols {
            let l = self.nearest(x);
            out.extend((0..m).map(|i| self.label_bit(l, i)));
        }
        out
    }
}

fn qpsk_point(b0: u8, b1: u8) -> Complex64 {
    let s = |b: u8| if b == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(s(b0), s(b1))
}

fn qam16_point_from_label(label: usize) -> Complex64 {
    let bit = |i: usize| (label >> (3 - i)) & 1;
    let level = |sign: usize, amp: usize| {
        let a = if amp == 0 { 1.0 } else { 3.0 };
        if sign == 0 {
            a
        } else {
            -a
        }
    };
    Complex64::new(level(bit(0), bit(2)), level(bit(1), bit(3))) / 10f64.sqrt()
}

/// Maps a bit sequence (multiple of `log2 M` long) to constellation symbols.
pub fn qam_map(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>> {
    let m = c.bits_per_symbol();
    if !bits.len().is_multiple_of(m) {
        return Err(invalid(format!("{} bits is not a multiple of {m} bits per symbol", bits.len())));
    }
    Ok(bits.chunks_exact(m).map(|ch| c.map_symbol(ch)).collect())
}

/// Subcarrier allocation of an `N`-point OFDM symbol.
///
/// Data subcarriers sit at signed frequencies `-N_d/2 ..= -1` and
/// `1 ..= N_d/2` (DC is always empty), listed in ascending frequency order;
/// the synchronization sequence uses `±1 ..= ±N_s/2` the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierPlan {
    n: usize,
    data_bins: Vec<usize>,
    pss_bins: Vec<usize>,
}

/// Number of subcarriers carrying the synchronization sequence.
pub const PSS_SUBCARRIERS: usize = 62;

fn symmetric_bins(n: usize, count: usize) -> Vec<usize> {
    let half = (count / 2) as i64;
    (-half..=half).filter(|&f| f != 0).map(|f| f.rem_euclid(n as i64) as usize).collect()
}

impl SubcarrierPlan {
    pub fn new(n: usize, n_d: usize) -> Result<Self> {
        if n_d == 0 || !n_d.is_multiple_of(2) || n_d >= n {
            return Err(invalid(format!("data subcarrier count must be even and in (0, N), got N_d = {n_d}, N = {n}")));
        }
        let pss = PSS_SUBCARRIERS.min(n_d);
        Ok(Self { n, data_bins: symmetric_bins(n, n_d), pss_bins: symmetric_bins(n, pss) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_d(&self) -> usize {
        self.data_bins.len()
    }

    /// FFT bin index of each data subcarrier.
    pub fn data_bins(&self) -> &[usize] {
        &self.data_bins
    }

    pub fn pss_bins(&self) -> &[usize] {
        &self.pss_bins
    }

    /// Signed frequency index of a bin (`bin` for the lower half, `bin − N` above).
    pub fn signed_frequency(&self, bin: usize) -> i64 {
        let b = bin as i64;
        if b < (self.n as i64 + 1) / 2 {
            b
        } else {
            b - self.n as i64
        }
    }

    pub fn data_frequencies(&self) -> Vec<i64> {
        self.data_bins.iter().map(|&b| self.signed_frequency(b)).collect()
    }

    pub fn is_data_bin(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &b in &self.data_bins {
            mask[b] = true;
        }
        mask
    }

    /// Gathers the data-subcarrier entries of a length-`N` vector.
    pub fn extract(&self, full: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n, full.len())?;
        Ok(self.data_bins.iter().map(|&b| full[b]).collect())
    }
}

/// Places `s_d` on the data subcarriers; guard entries are exactly zero.
pub fn subcarrier_map(s_d: &[Complex64], plan: &SubcarrierPlan) -> Result<Vec<Complex64>> {
    check_len(plan.n_d(), s_d.len())?;
    let mut out = vec![ZERO; plan.n()];
    for (&b, &v) in plan.data_bins().iter().zip(s_d) {
        out[b] = v;
    }
    Ok(out)
}

/// Inverse of [`subcarrier_map`].
pub fn subcarrier_extract(s: &[Complex64], plan: &SubcarrierPlan) -> Result<Vec<Complex64>> {
    plan.extract(s)
}

/// IDFT followed by cyclic-prefix insertion.
pub fn ofdm_modulate(s: &[Complex64], cp_len: usize, dft: &Dft) -> Result<Vec<Complex64>> {
    let n = dft.len();
    if cp_len >= n {
        return Err(invalid(format!("cyclic prefix {cp_len} must be shorter than N = {n}")));
    }
    let core = dft.inverse(s)?;
    let mut out = Vec::with_capacity(n + cp_len);
    out.extend_from_slice(&core[n - cp_len..]);
    out.extend_from_slice(&core);
    Ok(out)
}

/// Removes the cyclic prefix of one received OFDM symbol.
pub fn cp_strip(y: &[Complex64], cp_len: usize, n: usize) -> Result<Vec<Complex64>> {
    check_len(n + cp_len, y.len())?;
    Ok(y[cp_len..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::norm_sqr;

    #[test]
    fn qpsk_mapping_table() {
        let c = Constellation::qpsk();
        let p = c.map_symbol(&[0, 0]);
        assert!((p - Complex64::new(1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
        assert!((c.map_symbol(&[1, 0]) - Complex64::new(-1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
        for p in c.points() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn average_energy_is_one() {
        for m in [4, 16] {
            let c = Constellation::new(m).unwrap();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
            assert!((e - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for m in [4usize, 16] {
            let c = Constellation::new(m).unwrap();
            let pts = c.points();
            let dmin = 2.0 / if m == 4 { 2f64.sqrt() } else { 10f64.sqrt() };
            for i in 0..m {
                for j in 0..m {
                    if i != j && ((pts[i] - pts[j]).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "{m}-QAM labels {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn hard_bits_invert_mapping() {
        let c = Constellation::qam16();
        let bits: Vec<u8> = (0..64).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let s = qam_map(&bits, &c).unwrap();
        assert_eq!(c.hard_bits(&s), bits);
        assert!(qam_map(&bits[..63], &c).is_err());
    }

    #[test]
    fn plan_layout() {
        let plan = SubcarrierPlan::new(8, 4).unwrap();
        assert_eq!(plan.data_bins(), &[6, 7, 1, 2]);
        assert_eq!(plan.data_frequencies(), vec![-2, -1, 1, 2]);
        let full = subcarrier_map(&[Complex64::new(1.0, 0.0); 4], &plan).unwrap();
        let expect = [0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        for (x, e) in full.iter().zip(expect) {
            assert_eq!(x.re, e);
        }
        assert!(SubcarrierPlan::new(8, 8).is_err());
        assert!(SubcarrierPlan::new(8, 3).is_err());
    }

    #[test]
    fn full_plan_sizes() {
        let plan = SubcarrierPlan::new(2048, 1186).unwrap();
        assert_eq!(plan.n_d(), 1186);
        assert_eq!(plan.pss_bins().len(), 62);
        assert!(!plan.data_bins().contains(&0));
        assert_eq!(plan.data_frequencies()[0], -593);
        assert_eq!(*plan.data_frequencies().last().unwrap(), 593);
    }

    #[test]
    fn map_extract_round_trip_and_norm() {
        let plan = SubcarrierPlan::new(64, 40).unwrap();
        let s: Vec<Complex64> = (0..40).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let full = subcarrier_map(&s, &plan).unwrap();
        assert_eq!(subcarrier_extract(&full, &plan).unwrap(), s);
        assert!((norm_sqr(&full) - norm_sqr(&s)).abs() < 1e-12 * norm_sqr(&s));
    }

    #[test]
    fn ofdm_round_trip_and_cp() {
        let n = 64;
        let dft = Dft::new(n).unwrap();
        let s: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64).sin(), (i as f64).cos())).collect();
        let y0 = ofdm_modulate(&s, 0, &dft).unwrap();
        assert_eq!(y0, dft.inverse(&s).unwrap());
        let l = 9;
        let y = ofdm_modulate(&s, l, &dft).unwrap();
        assert_eq!(&y[..l], &y[n..]);
        let core = cp_strip(&y, l, n).unwrap();
        assert!((norm_sqr(&core) - norm_sqr(&s)).abs() < 1e-10);
        let back = dft.forward(&core).unwrap();
        for (a, b) in back.iter().zip(&s) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(ofdm_modulate(&s, n, &dft).is_err());
        assert!(cp_strip(&y, l + 1, n).is_err());
    }
}
