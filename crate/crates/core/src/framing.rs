//! Radio frame assembly: symbol schedule, sample layout, synchronization
//! sequence, pilot vector, slot-level code layout and waveform capture files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::coding::{coded_len, largest_supported_at_most, CodeRate, TurboCodeSpec, TurboCodec};
use crate::error::{check_len, invalid, Error, Result};
use crate::modem::{ofdm_modulate, qam_map, subcarrier_map, Constellation, SubcarrierPlan};
use crate::numerics::{norm_sqr, streams, Complex64, Dft, RandomSource, ZERO};

pub const SLOTS_PER_FRAME: usize = 20;
pub const SYMBOLS_PER_SLOT: usize = 7;
/// Data symbols following the pilot in each data slot.
pub const DATA_SYMBOLS_PER_SLOT: usize = 6;
/// First slot carrying payload.
pub const FIRST_DATA_SLOT: usize = 2;
pub const DATA_SLOTS: usize = SLOTS_PER_FRAME - FIRST_DATA_SLOT;
pub const DEFAULT_ZC_ROOT: u32 = 25;
pub const DEFAULT_PILOT_SEED: u64 = 0x5EED;
pub const SAMPLE_RATE_HZ: f64 = 153.6e6;
/// Version tag of the schedule, stored in capture metadata.
pub const SCHEDULE_VERSION: u32 = 1;
const ZC_LEN: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Pss,
    Pilot,
    Null,
    Data,
    Idle,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::Pss => "PSS",
            Role::Pilot => "PILOT",
            Role::Null => "NULL",
            Role::Data => "DATA",
            Role::Idle => "IDLE",
        };
        f.write_str(s)
    }
}

/// Which slots carry the synchronization sequence in their last symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PssPlacement {
    /// Slots 0 and 10.
    Twice,
    /// Every slot from 0 through 10.
    Slots0To10,
}

/// Per-symbol role map and CP lengths of one radio frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSchedule {
    n: usize,
    cp_first: usize,
    cp_other: usize,
    pss: PssPlacement,
}

impl FrameSchedule {
    /// Schedule for DFT size `n`; CP lengths are 160/144 at `n = 2048` and
    /// scale proportionally otherwise.
    pub fn new(n: usize, pss: PssPlacement) -> Result<Self> {
        if n < 64 || !n.is_power_of_two() {
            return Err(invalid(format!("frame DFT size must be a power of two >= 64, got {n}")));
        }
        Ok(Self { n, cp_first: 160 * n / 2048, cp_other: 144 * n / 2048, pss })
    }

    pub fn lte(pss: PssPlacement) -> Self {
        Self::new(2048, pss).expect("N = 2048")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pss_placement(&self) -> PssPlacement {
        self.pss
    }

    pub fn cp_len(&self, symbol: usize) -> usize {
        if symbol == 0 {
            self.cp_first
        } else {
            self.cp_other
        }
    }

    pub fn slot_len(&self) -> usize {
        SYMBOLS_PER_SLOT * self.n + self.cp_first + (SYMBOLS_PER_SLOT - 1) * self.cp_other
    }

    pub fn frame_len(&self) -> usize {
        SLOTS_PER_FRAME * self.slot_len()
    }

    pub fn role(&self, slot: usize, symbol: usize) -> Role {
        let pss_slot = match self.pss {
            PssPlacement::Twice => slot == 0 || slot == 10,
            PssPlacement::Slots0To10 => slot <= 10,
        };
        if symbol == SYMBOLS_PER_SLOT - 1 && pss_slot {
            return Role::Pss;
        }
        match (slot, symbol) {
            (0, _) => Role::Idle,
            (1, 0) => Role::Null,
            (1, _) => Role::Idle,
            (_, 0) => Role::Pilot,
            _ => Role::Data,
        }
    }

    /// Offset of a symbol's first (CP) sample from the start of its slot.
    pub fn offset_in_slot(&self, symbol: usize) -> usize {
        (0..symbol).map(|s| self.n + self.cp_len(s)).sum()
    }
}

/// One entry of the frame layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayoutEntry {
    pub slot: usize,
    pub symbol: usize,
    /// Frame offset of the first CP sample.
    pub offset: usize,
    pub role: Role,
    pub cp_len: usize,
}

impl LayoutEntry {
    /// Frame offset of the first sample after the CP.
    pub fn core_offset(&self) -> usize {
        self.offset + self.cp_len
    }
}

pub fn frame_layout(schedule: &FrameSchedule) -> Vec<LayoutEntry> {
    let mut offset = 0;
    let mut out = Vec::with_capacity(SLOTS_PER_FRAME * SYMBOLS_PER_SLOT);
    for slot in 0..SLOTS_PER_FRAME {
        for symbol in 0..SYMBOLS_PER_SLOT {
            let cp_len = schedule.cp_len(symbol);
            out.push(LayoutEntry { slot, symbol, offset, role: schedule.role(slot, symbol), cp_len });
            offset += cp_len + schedule.n();
        }
    }
    out
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Length-63 Zadoff–Chu sequence with the given root.
pub fn zadoff_chu(root: u32) -> Result<Vec<Complex64>> {
    if root == 0 || gcd(root, ZC_LEN as u32) != 1 {
        return Err(invalid(format!("ZC root {root} is not coprime with {ZC_LEN}")));
    }
    Ok((0..ZC_LEN)
        .map(|n| {
            let n = n as f64;
            Complex64::from_polar(1.0, -std::f64::consts::PI * root as f64 * n * (n + 1.0) / ZC_LEN as f64)
        })
        .collect())
}

/// Synchronization sequence in frequency (`t`, length N) and its
/// unit-norm time-domain reference `t_r`.
pub fn zc_pss(root: u32, plan: &SubcarrierPlan, dft: &Dft) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let zc = zadoff_chu(root)?;
    let bins = plan.pss_bins();
    if bins.len() != ZC_LEN - 1 {
        return Err(invalid("synchronization sequence needs 62 subcarriers"));
    }
    // Element 31 would land on DC and is dropped; bins are in ascending
    // signed frequency, matching the remaining sequence order.
    let mut t = vec![ZERO; plan.n()];
    for (&b, &z) in bins.iter().zip(zc.iter().enumerate().filter(|(i, _)| *i != ZC_LEN / 2).map(|(_, z)| z)) {
        t[b] = z;
    }
    let mut t_r = dft.inverse(&t)?;
    let norm = norm_sqr(&t_r).sqrt();
    t_r.iter_mut().for_each(|v| *v /= norm);
    Ok((t, t_r))
}

/// Fixed 4-QAM pilot on the data subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSpec {
    pub seed: u64,
    /// Unit-modulus pilot entries, one per data subcarrier.
    pub p_d: Vec<Complex64>,
}

impl PilotSpec {
    pub fn new(seed: u64, n_d: usize) -> Self {
        let mut rng = RandomSource::new(seed, streams::PILOT).for_trial(0);
        let qpsk = Constellation::qpsk();
        let p_d = (0..n_d).map(|_| qpsk.points()[rng.index(4)]).collect();
        Self { seed, p_d }
    }
}

/// Dummy symbol carried by the last data subcarrier under 16-QAM.
pub const DUMMY_SYMBOL: Complex64 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);

const MAX_CODEWORDS: usize = 8;
const FILL_MARGIN: f64 = 0.005;

/// How a data slot's six symbols are filled with turbo codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotCoding {
    pub constellation: Constellation,
    pub rate: CodeRate,
    pub iterations: usize,
    /// Codewords per slot.
    pub codewords: usize,
    /// Information bits per codeword.
    pub k: usize,
    /// Data subcarriers per symbol carrying coded bits.
    pub used_subcarriers: usize,
    pub n_d: usize,
    /// Slot bit interleaver: codeword-order bit `i` is sent at position `interleaver[i]`.
    pub interleaver: Vec<usize>,
}

impl SlotCoding {
    /// Picks the fewest codewords (at most eight) whose largest fitting
    /// interleaver size comes within 0.5% of the best achievable slot fill.
    pub fn new(n_d: usize, constellation: Constellation, rate: CodeRate, iterations: usize) -> Result<Self> {
        let used = if constellation.order() == 16 { n_d - 1 } else { n_d };
        let capacity = DATA_SYMBOLS_PER_SLOT * used * constellation.bits_per_symbol();
        // Largest fitting interleaver size for each codeword count.
        let fits: Vec<(usize, usize)> = (1..=MAX_CODEWORDS)
            .filter_map(|c| {
                let per = capacity / c;
                let mut k = largest_supported_at_most(per.saturating_sub(12) / rate.streams())?;
                while coded_len(k, rate) > per {
                    k = largest_supported_at_most(k - 1)?;
                }
                Some((c, k))
            })
            .collect();
        let most = fits.iter().map(|(c, k)| c * k).max();
        let most = most.ok_or_else(|| invalid(format!("slot capacity {capacity} cannot hold a codeword")))?;
        // Fewest codewords within a small margin of the best fill.
        let (codewords, k) = *fits
            .iter()
            .find(|(c, k)| (c * k) as f64 >= (1.0 - FILL_MARGIN) * most as f64)
            .expect("maximum is attained");
        // Fixed pseudo-random permutation so that a lost symbol or a faded
        // subcarrier hits scattered positions of every codeword.
        let mut interleaver: Vec<usize> = (0..capacity).collect();
        let mut rng = RandomSource::new(capacity as u64, streams::INTERLEAVER).for_trial(0);
        for i in (1..capacity).rev() {
            interleaver.swap(i, rng.index(i + 1));
        }
        Ok(Self { constellation, rate, iterations, codewords, k, used_subcarriers: used, n_d, interleaver })
    }

    pub fn spec(&self) -> TurboCodeSpec {
        TurboCodeSpec::new(self.k, self.rate).with_iterations(self.iterations)
    }

    pub fn info_bits(&self) -> usize {
        self.codewords * self.k
    }

    pub fn coded_bits(&self) -> usize {
        self.codewords * coded_len(self.k, self.rate)
    }

    pub fn bits_per_symbol_vector(&self) -> usize {
        self.used_subcarriers * self.constellation.bits_per_symbol()
    }

    pub fn capacity(&self) -> usize {
        DATA_SYMBOLS_PER_SLOT * self.bits_per_symbol_vector()
    }

    /// Encodes one slot of information bits into the interleaved slot bit
    /// vector (codewords zero-padded to capacity, in transmission order)
    /// and six `N_d`-long symbol vectors.
    pub fn encode(&self, codec: &TurboCodec, info: &[u8]) -> Result<(Vec<u8>, Vec<Vec<Complex64>>)> {
        check_len(self.info_bits(), info.len())?;
        let mut coded = Vec::with_capacity(self.capacity());
        for cw in info.chunks(self.k) {
            coded.extend(codec.encode(cw)?);
        }
        coded.resize(self.capacity(), 0);
        let mut sent = vec![0u8; self.capacity()];
        for (&b, &p) in coded.iter().zip(&self.interleaver) {
            sent[p] = b;
        }
        let symbols =
            sent.chunks(self.bits_per_symbol_vector()).map(|bits| self.map_vector(bits)).collect::<Result<Vec<_>>>()?;
        Ok((sent, symbols))
    }

    fn map_vector(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let mut s = qam_map(bits, &self.constellation)?;
        if self.used_subcarriers < self.n_d {
            s.push(DUMMY_SYMBOL);
        }
        Ok(s)
    }

    /// De-interleaves slot LLRs (capacity long, transmission order) and
    /// splits them into per-codeword vectors.
    pub fn split_llrs(&self, llrs: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len(self.capacity(), llrs.len())?;
        let len = coded_len(self.k, self.rate);
        let ordered: Vec<f64> = self.interleaver[..self.codewords * len].iter().map(|&p| llrs[p]).collect();
        Ok(ordered.chunks(len).map(<[f64]>::to_vec).collect())
    }
}

/// Ground truth of one transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLedger {
    pub layout: Vec<LayoutEntry>,
    /// Information bits per data slot.
    pub info_bits: Vec<Vec<u8>>,
    /// Interleaved coded bits per data slot, in transmission order.
    pub coded_bits: Vec<Vec<u8>>,
    /// Data-subcarrier symbols per data slot and data symbol; symbols whose
    /// position is taken by the synchronization sequence are still recorded
    /// but not transmitted.
    pub data_symbols: Vec<Vec<Vec<Complex64>>>,
}

/// Transmitted frame samples and their ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub samples: Vec<Complex64>,
    pub ledger: FrameLedger,
}

/// Filler symbols for IDLE positions, drawn from a fixed stream.
fn idle_symbol(plan: &SubcarrierPlan, seed: u64, index: u64) -> Vec<Complex64> {
    let mut rng = RandomSource::new(seed ^ 0x1D1E, streams::PAYLOAD).for_trial(index);
    let qpsk = Constellation::qpsk();
    (0..plan.n_d()).map(|_| qpsk.points()[rng.index(4)]).collect()
}

/// Builds a frame carrying `payload` (18 slots of information bits).
pub fn build_frame(
    payload: &[u8],
    schedule: &FrameSchedule,
    plan: &SubcarrierPlan,
    pilot: &PilotSpec,
    coding: &SlotCoding,
    zc_root: u32,
) -> Result<Frame> {
    check_len(DATA_SLOTS * coding.info_bits(), payload.len())?;
    if plan.n() != schedule.n() || pilot.p_d.len() != plan.n_d() {
        return Err(invalid("schedule, subcarrier plan and pilot sizes disagree"));
    }
    let dft = Dft::new(plan.n())?;
    let codec = TurboCodec::new(coding.spec())?;
    let (pss, _) = zc_pss(zc_root, plan, &dft)?;
    let pilot_full = subcarrier_map(&pilot.p_d, plan)?;
    let layout = frame_layout(schedule);

    let mut info_bits = Vec::with_capacity(DATA_SLOTS);
    let mut coded_bits = Vec::with_capacity(DATA_SLOTS);
    let mut data_symbols = Vec::with_capacity(DATA_SLOTS);
    for info in payload.chunks(coding.info_bits()) {
        let (coded, symbols) = coding.encode(&codec, info)?;
        info_bits.push(info.to_vec());
        coded_bits.push(coded);
        data_symbols.push(symbols);
    }

    let mut samples = Vec::with_capacity(schedule.frame_len());
    for (i, e) in layout.iter().enumerate() {
        let freq = match e.role {
            Role::Pss => pss.clone(),
            Role::Pilot => pilot_full.clone(),
            Role::Null => vec![ZERO; plan.n()],
            Role::Idle => subcarrier_map(&idle_symbol(plan, pilot.seed, i as u64), plan)?,
            Role::Data => subcarrier_map(&data_symbols[e.slot - FIRST_DATA_SLOT][e.symbol - 1], plan)?,
        };
        samples.extend(ofdm_modulate(&freq, e.cp_len, &dft)?);
    }
    Ok(Frame { samples, ledger: FrameLedger { layout, info_bits, coded_bits, data_symbols } })
}

/// The `N` post-CP samples of a symbol, for a frame starting at `frame_start`.
pub fn symbol_core<'a>(
    stream: &'a [Complex64],
    entry: &LayoutEntry,
    frame_start: usize,
    n: usize,
) -> Result<&'a [Complex64]> {
    let start = frame_start + entry.core_offset();
    stream.get(start..start + n).ok_or_else(|| invalid(format!("symbol at {start} extends past the stream end")))
}

/// Sidecar metadata of a waveform capture.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureMeta {
    pub n: usize,
    pub sample_rate_hz: f64,
    pub schedule_version: u32,
    pub seed: u64,
    /// Further `key = value` pairs (modulation, rate, SNR, ...).
    pub extra: BTreeMap<String, String>,
}

impl CaptureMeta {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, sample_rate_hz: SAMPLE_RATE_HZ, schedule_version: SCHEDULE_VERSION, seed, extra: BTreeMap::new() }
    }
}

/// Path of the metadata file belonging to a capture.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes samples as little-endian interleaved `f64` (re, im) pairs plus a
/// `<path>.meta` text file.
pub fn write_capture(path: &Path, samples: &[Complex64], meta: &CaptureMeta) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in samples {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    let mut text = format!(
        "n = {}\nsample_rate_hz = {}\nschedule_version = {}\nseed = {}\nsamples = {}\n",
        meta.n,
        meta.sample_rate_hz,
        meta.schedule_version,
        meta.seed,
        samples.len()
    );
    for (k, v) in &meta.extra {
        text.push_str(&format!("{k} = {v}\n"));
    }
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn read_capture(path: &Path) -> Result<(Vec<Complex64>, CaptureMeta)> {
    let bytes = fs::read(path)?;
    if bytes.len() % 16 != 0 {
        return Err(Error::Capture(format!("{} bytes is not a whole number of samples", bytes.len())));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
    let samples: Vec<Complex64> = bytes.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();

    let text = fs::read_to_string(sidecar_path(path))?;
    let mut fields = BTreeMap::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Capture(format!("malformed metadata line '{line}'")))?;
        fields.insert(k.trim().to_string(), v.trim().to_string());
    }
    fn take<T: std::str::FromStr>(m: &mut BTreeMap<String, String>, key: &str) -> Result<T> {
        let v = m.remove(key).ok_or_else(|| Error::Capture(format!("metadata lacks '{key}'")))?;
        v.parse().map_err(|_| Error::Capture(format!("bad metadata value {key} = {v}")))
    }
    let n = take(&mut fields, "n")?;
    let sample_rate_hz = take(&mut fields, "sample_rate_hz")?;
    let schedule_version = take(&mut fields, "schedule_version")?;
    let seed = take(&mut fields, "seed")?;
    let count: usize = take(&mut fields, "samples")?;
    if count != samples.len() {
        return Err(Error::Capture(format!("metadata says {count} samples, file holds {}", samples.len())));
    }
    if schedule_version != SCHEDULE_VERSION {
        return Err(Error::Capture(format!("unsupported schedule version {schedule_version}")));
    }
    Ok((samples, CaptureMeta { n, sample_rate_hz, schedule_version, seed, extra: fields }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_arithmetic() {
        let s = FrameSchedule::lte(PssPlacement::Twice);
        assert_eq!(s.slot_len(), 15360);
        assert_eq!(s.frame_len(), 307_200);
        assert!((s.frame_len() as f64 / SAMPLE_RATE_HZ - 2e-3).abs() < 1e-15);
        let layout = frame_layout(&s);
        assert_eq!(layout.len(), 140);
        assert_eq!((layout[0].offset, layout[0].cp_len), (0, 160));
        assert!(layout.windows(2).all(|w| w[0].offset < w[1].offset));
        let last = layout.last().unwrap();
        assert_eq!(last.offset + last.cp_len + 2048, 307_200);
        assert_eq!(layout[6].role, Role::Pss);
        assert_eq!(layout[6].offset, 160 + 5 * 144 + 6 * 2048);
        assert_eq!(layout[6].core_offset(), 160 + 6 * 144 + 6 * 2048);
    }

    #[test]
    fn role_map() {
        let s = FrameSchedule::lte(PssPlacement::Twice);
        let count = |r| frame_layout(&s).iter().filter(|e| e.role == r).count();
        assert_eq!(count(Role::Pss), 2);
        assert_eq!(count(Role::Pilot), 18);
        assert_eq!(count(Role::Null), 1);
        assert_eq!(count(Role::Data), 18 * 6 - 1);
        assert_eq!(s.role(10, 6), Role::Pss);
        assert_eq!(s.role(1, 0), Role::Null);
        let lit = FrameSchedule::lte(PssPlacement::Slots0To10);
        assert_eq!(frame_layout(&lit).iter().filter(|e| e.role == Role::Pss).count(), 11);
    }

    #[test]
    fn zc_properties() {
        assert!(zadoff_chu(21).is_err());
        assert!(zadoff_chu(0).is_err());
        let zc = zadoff_chu(25).unwrap();
        for lag in 1..63 {
            let c: Complex64 = (0..63).map(|n| zc[n] * zc[(n + lag) % 63].conj()).sum();
            assert!(c.norm() < 1e-9, "lag {lag}: {}", c.norm());
        }
        let plan = SubcarrierPlan::new(2048, 1186).unwrap();
        let dft = Dft::new(2048).unwrap();
        let (t, t_r) = zc_pss(25, &plan, &dft).unwrap();
        assert!((norm_sqr(&t_r) - 1.0).abs() < 1e-12);
        for &b in plan.pss_bins() {
            assert!((t[b].norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(t[0], ZERO);
        assert_eq!(t.iter().filter(|v| v.norm() > 0.0).count(), 62);
        assert_eq!(t[2048 - 31], zc[0]);
        assert_eq!(t[31], zc[62]);
    }

    #[test]
    fn pilot_is_fixed_by_seed() {
        let a = PilotSpec::new(DEFAULT_PILOT_SEED, 1186);
        assert_eq!(a, PilotSpec::new(DEFAULT_PILOT_SEED, 1186));
        assert_ne!(a, PilotSpec::new(1, 1186));
        assert!(a.p_d.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        assert!(a.p_d.iter().all(|p| p.re.abs() > 0.7 && p.im.abs() > 0.7));
    }

    #[test]
    fn slot_code_layouts() {
        let cases = [
            (Constellation::qpsk(), CodeRate::Third, 1, 4736, 14232),
            (Constellation::qpsk(), CodeRate::Half, 2, 3520, 14232),
            (Constellation::qam16(), CodeRate::Third, 2, 4736, 28440),
            (Constellation::qam16(), CodeRate::Half, 4, 3520, 28440),
        ];
        for (c, rate, cw, k, cap) in cases {
            let sc = SlotCoding::new(1186, c, rate, 8).unwrap();
            assert_eq!((sc.codewords, sc.k, sc.capacity()), (cw, k, cap));
            assert!(sc.coded_bits() <= sc.capacity());
        }
    }

    #[test]
    fn interleaved_slot_round_trip() {
        let sc = SlotCoding::new(148, Constellation::qpsk(), CodeRate::Half, 4).unwrap();
        let codec = TurboCodec::new(sc.spec()).unwrap();
        let info = RandomSource::new(5, streams::PAYLOAD).for_trial(0).bits(sc.info_bits());
        let (sent, symbols) = sc.encode(&codec, &info).unwrap();
        assert_eq!((sent.len(), symbols.len()), (sc.capacity(), DATA_SYMBOLS_PER_SLOT));
        // Erase one whole symbol: every codeword still decodes.
        let per = sc.bits_per_symbol_vector();
        let llr: Vec<f64> = sent
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                if i / per == 5 {
                    0.0
                } else if b == 0 {
                    5.0
                } else {
                    -5.0
                }
            })
            .collect();
        let decoded: Vec<u8> = sc.split_llrs(&llr).unwrap().iter().flat_map(|l| codec.decode(l).unwrap()).collect();
        assert_eq!(decoded, info);
    }

    #[test]
    fn small_frame_round_trip() {
        let n = 256;
        let s = FrameSchedule::new(n, PssPlacement::Twice).unwrap();
        assert_eq!(s.cp_len(0), 20);
        let plan = SubcarrierPlan::new(n, 120).unwrap();
        let pilot = PilotSpec::new(3, 120);
        let coding = SlotCoding::new(120, Constellation::qam16(), CodeRate::Third, 4).unwrap();
        let mut rng = RandomSource::new(1, streams::PAYLOAD).for_trial(0);
        let payload = rng.bits(DATA_SLOTS * coding.info_bits());
        let frame = build_frame(&payload, &s, &plan, &pilot, &coding, 25).unwrap();
        assert_eq!(frame.samples.len(), s.frame_len());
        assert!(build_frame(&payload[1..], &s, &plan, &pilot, &coding, 25).is_err());

        let dft = Dft::new(n).unwrap();
        let pilot_full = subcarrier_map(&pilot.p_d, &plan).unwrap();
        for e in &frame.ledger.layout {
            let core = symbol_core(&frame.samples, e, 0, n).unwrap();
            let freq = dft.forward(core).unwrap();
            match e.role {
                Role::Null => assert!(frame.samples[e.offset..e.core_offset() + n].iter().all(|v| *v == ZERO)),
                Role::Pilot => {
                    for (a, b) in freq.iter().zip(&pilot_full) {
                        assert!((a - b).norm() < 1e-12);
                    }
                }
                Role::Data => {
                    let want = &frame.ledger.data_symbols[e.slot - FIRST_DATA_SLOT][e.symbol - 1];
                    let got = plan.extract(&freq).unwrap();
                    for (a, b) in got.iter().zip(want) {
                        assert!((a - b).norm() < 1e-12);
                    }
                }
                _ => {}
            }
        }
        for symbols in &frame.ledger.data_symbols {
            assert!(symbols.iter().all(|s| (s.last().unwrap() - DUMMY_SYMBOL).norm() < 1e-15));
        }
    }

    #[test]
    fn capture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.iq");
        let samples: Vec<Complex64> = (0..100).map(|i| Complex64::new(i as f64 * 0.5, -(i as f64))).collect();
        let mut meta = CaptureMeta::new(2048, 42);
        meta.extra.insert("modulation".into(), "16".into());
        write_capture(&path, &samples, &meta).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 1600);
        let (back, m) = read_capture(&path).unwrap();
        assert_eq!(back, samples);
        assert_eq!(m, meta);
        fs::write(&path, [0u8; 15]).unwrap();
        assert!(matches!(read_capture(&path), Err(Error::Capture(_))));
    }
}
