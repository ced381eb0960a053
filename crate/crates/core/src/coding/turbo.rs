use super::qpp::{invert_permutation, qpp_interleave};
use crate::error::{check_len, invalid, Result};

/// Coded bits added by trellis termination (3 tail steps × 2 bits × 2 encoders).
pub const TAIL_BITS: usize = 12;
const STATES: usize = 8;
const MEMORY: usize = 3;

/// Code rate of the turbo code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeRate {
    /// Mother code: systematic plus both parity streams.
    Third,
    /// Systematic bits kept, parity streams alternately punctured.
    Half,
}

impl CodeRate {
    pub fn streams(self) -> usize {
        match self {
            CodeRate::Third => 3,
            CodeRate::Half => 2,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "1/3" => Some(CodeRate::Third),
            "1/2" => Some(CodeRate::Half),
            _ => None,
        }
    }
}

impl std::fmt::Display for CodeRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CodeRate::Third => f.write_str("1/3"),
            CodeRate::Half => f.write_str("1/2"),
        }
    }
}

/// Parallel-concatenated code built from two [13, 15] octal RSC encoders
/// (constraint length 4) and the QPP interleaver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurboCodeSpec {
    pub k: usize,
    pub rate: CodeRate,
    pub iterations: usize,
}

impl TurboCodeSpec {
    pub fn new(k: usize, rate: CodeRate) -> Self {
        Self { k, rate, iterations: 8 }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    /// Coded length: `K/rate + 12`.
    pub fn coded_len(&self) -> usize {
        coded_len(self.k, self.rate)
    }
}

pub fn coded_len(k: usize, rate: CodeRate) -> usize {
    rate.streams() * k + TAIL_BITS
}

/// One RSC trellis branch, indexed by the register input `a` rather than the
/// information bit so that tail steps are simply the `a = 0` branches.
#[derive(Debug, Clone, Copy)]
struct Branch {
    next: usize,
    info: u8,
    parity: u8,
}

// State bits: s1 (newest) = bit 2, s2 = bit 1, s3 = bit 0.
// Feedback 13 = 1 + D² + D³, feedforward 15 = 1 + D + D³.
const fn branch(state: usize, a: usize) -> Branch {
    let s1 = (state >> 2) & 1;
    let s2 = (state >> 1) & 1;
    let s3 = state & 1;
    Branch { next: (a << 2) | (state >> 1), info: (a ^ s2 ^ s3) as u8, parity: (a ^ s1 ^ s3) as u8 }
}

const fn build_trellis() -> [[Branch; 2]; STATES] {
    let mut t = [[Branch { next: 0, info: 0, parity: 0 }; 2]; STATES];
    let mut s = 0;
    while s < STATES {
        t[s][0] = branch(s, 0);
        t[s][1] = branch(s, 1);
        s += 1;
    }
    t
}

static TRELLIS: [[Branch; 2]; STATES] = build_trellis();

/// Runs one constituent encoder; returns parity bits and the 3 (info, parity) tail pairs.
fn rsc_encode(bits: impl Iterator<Item = u8>) -> (Vec<u8>, [(u8, u8); MEMORY]) {
    let mut state = 0usize;
    let mut parity = Vec::new();
    for u in bits {
        let s2 = (state >> 1) & 1;
        let s3 = state & 1;
        let a = (u as usize) ^ s2 ^ s3;
        let br = TRELLIS[state][a];
        parity.push(br.parity);
        state = br.next;
    }
    let mut tail = [(0, 0); MEMORY];
    for t in tail.iter_mut() {
        let br = TRELLIS[state][0];
        *t = (br.info, br.parity);
        state = br.next;
    }
    debug_assert_eq!(state, 0);
    (parity, tail)
}

/// Encoder and max-log-MAP iterative decoder for one block size.
#[derive(Debug, Clone)]
pub struct TurboCodec {
    spec: TurboCodeSpec,
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl TurboCodec {
    pub fn new(spec: TurboCodeSpec) -> Result<Self> {
        if spec.iterations == 0 {
            return Err(invalid("turbo decoder needs at least one iteration"));
        }
        let perm = qpp_interleave(spec.k)?;
        let inv = invert_permutation(&perm);
        Ok(Self { spec, perm, inv })
    }

    pub fn spec(&self) -> &TurboCodeSpec {
        &self.spec
    }

    /// Rate-1/3 mother codeword: `[x_k, z_k, z'_k]` for each k, then
    /// `x_K z_K … x_{K+2} z_{K+2}` of encoder 1 and the same for encoder 2.
    fn encode_mother(&self, info: &[u8]) -> Vec<u8> {
        let k = self.spec.k;
        let (p1, t1) = rsc_encode(info.iter().copied());
        let (p2, t2) = rsc_encode(self.perm.iter().map(|&i| info[i]));
        let mut out = Vec::with_capacity(3 * k + TAIL_BITS);
        for i in 0..k {
            out.extend_from_slice(&[info[i], p1[i], p2[i]]);
        }
        for (x, z) in t1.into_iter().chain(t2) {
            out.push(x);
            out.push(z);
        }
        out
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        check_len(self.spec.k, info.len())?;
        if info.iter().any(|&b| b > 1) {
            return Err(invalid("information bits must be 0 or 1"));
        }
        let mother = self.encode_mother(info);
        Ok(match self.spec.rate {
            CodeRate::Third => mother,
            CodeRate::Half => puncture(&mother, self.spec.k),
        })
    }

    /// Decodes LLRs (positive favours bit 0) into `K` hard decisions.
    pub fn decode(&self, llr: &[f64]) -> Result<Vec<u8>> {
        check_len(self.spec.coded_len(), llr.len())?;
        let k = self.spec.k;
        let mother = match self.spec.rate {
            CodeRate::Third => llr.to_vec(),
            CodeRate::Half => depuncture(llr, k),
        };

        let sys: Vec<f64> = (0..k).map(|i| mother[3 * i]).collect();
        let par1: Vec<f64> = (0..k).map(|i| mother[3 * i + 1]).collect();
        let par2: Vec<f64> = (0..k).map(|i| mother[3 * i + 2]).collect();
        let tail = &mother[3 * k..];
        let tail1: [(f64, f64); MEMORY] = std::array::from_fn(|j| (tail[2 * j], tail[2 * j + 1]));
        let tail2: [(f64, f64); MEMORY] = std::array::from_fn(|j| (tail[6 + 2 * j], tail[6 + 2 * j + 1]));
        let sys_int: Vec<f64> = self.perm.iter().map(|&i| sys[i]).collect();

        let mut siso = Siso::new(k);
        let mut apriori1 = vec![0.0; k];
        let mut apriori2 = vec![0.0; k];
        let mut app = vec![0.0; k];
        for _ in 0..self.spec.iterations {
            let ext1 = siso.run(&sys, &par1, &apriori1, &tail1);
            for (i, &p) in self.perm.iter().enumerate() {
                apriori2[i] = ext1[p];
            }
            let ext2 = siso.run(&sys_int, &par2, &apriori2, &tail2);
            for (i, &p) in self.perm.iter().enumerate() {
                apriori1[p] = ext2[i];
            }
            for i in 0..k {
                let j = self.inv[i];
                app[i] = sys[i] + ext1[i] + ext2[j];
            }
        }
        Ok(app.iter().map(|&l| (l < 0.0) as u8).collect())
    }
}

/// Max-log-MAP BCJR for one terminated constituent code.
struct Siso {
    k: usize,
    alpha: Vec<[f64; STATES]>,
    gamma: Vec<[[f64; 2]; STATES]>,
}

const NEG: f64 = -1e300;

#[inline]
fn sgn(bit: u8) -> f64 {
    1.0 - 2.0 * bit as f64
}

impl Siso {
    fn new(k: usize) -> Self {
        Self { k, alpha: vec![[NEG; STATES]; k + MEMORY + 1], gamma: vec![[[0.0; 2]; STATES]; k + MEMORY] }
    }

    /// Returns extrinsic LLRs for the `k` information bits.
    fn run(&mut self, sys: &[f64], par: &[f64], apriori: &[f64], tail: &[(f64, f64); MEMORY]) -> Vec<f64> {
        let k = self.k;
        let steps = k + MEMORY;
        for t in 0..steps {
            let (ls, lp, allowed) = if t < k {
                (sys[t] + apriori[t], par[t], 2)
            } else {
                let (x, z) = tail[t - k];
                (x, z, 1)
            };
            for s in 0..STATES {
                for a in 0..2 {
                    self.gamma[t][s][a] = if a < allowed {
                        let br = TRELLIS[s][a];
                        0.5 * (ls * sgn(br.info) + lp * sgn(br.parity))
                    } else {
                        NEG
                    };
                }
            }
        }

        self.alpha[0] = [NEG; STATES];
        self.alpha[0][0] = 0.0;
        for t in 0..steps {
            let mut next = [NEG; STATES];
            for s in 0..STATES {
                let a_s = self.alpha[t][s];
                if a_s <= NEG {
                    continue;
                }
                for a in 0..2 {
                    let br = TRELLIS[s][a];
                    let m = a_s + self.gamma[t][s][a];
                    if m > next[br.next] {
                        next[br.next] = m;
                    }
                }
            }
            let norm = next.iter().cloned().fold(NEG, f64::max);
            next.iter_mut().for_each(|x| {
                if *x > NEG {
                    *x -= norm
                }
            });
            self.alpha[t + 1] = next;
        }

        let mut beta = [NEG; STATES];
        beta[0] = 0.0;
        let mut ext = vec![0.0; k];
        for t in (0..steps).rev() {
            if t < k {
                let mut best = [NEG; 2];
                for s in 0..STATES {
                    let a_s = self.alpha[t][s];
                    if a_s <= NEG {
                        continue;
                    }
                    for a in 0..2 {
                        let br = TRELLIS[s][a];
                        let m = a_s + self.gamma[t][s][a] + beta[br.next];
                        let u = br.info as usize;
                        if m > best[u] {
                            best[u] = m;
                        }
                    }
                }
                ext[t] = best[0] - best[1] - sys[t] - apriori[t];
            }
            let mut prev = [NEG; STATES];
            for s in 0..STATES {
                for a in 0..2 {
                    let br = TRELLIS[s][a];
                    let m = self.gamma[t][s][a] + beta[br.next];
                    if m > prev[s] {
                        prev[s] = m;
                    }
                }
            }
            let norm = prev.iter().cloned().fold(NEG, f64::max);
            prev.iter_mut().for_each(|x| {
                if *x > NEG {
                    *x -= norm
                }
            });
            beta = prev;
        }
        ext
    }
}

/// Rate 1/3 → 1/2: keep systematic bits, parity 1 on even k, parity 2 on odd k; keep tails.
pub fn puncture(mother: &[u8], k: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * k + TAIL_BITS);
    for i in 0..k {
        out.push(mother[3 * i]);
        out.push(mother[3 * i + 1 + (i & 1)]);
    }
    out.extend_from_slice(&mother[3 * k..]);
    out
}

/// Inverse of [`puncture`] on LLRs; punctured positions get LLR 0.
pub fn depuncture(llr: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; 3 * k + TAIL_BITS];
    for i in 0..k {
        out[3 * i] = llr[2 * i];
        out[3 * i + 1 + (i & 1)] = llr[2 * i + 1];
    }
    out[3 * k..].copy_from_slice(&llr[2 * k..]);
    out
}

/// Encodes `info_bits` under `spec`.
pub fn turbo_encode(info_bits: &[u8], spec: TurboCodeSpec) -> Result<Vec<u8>> {
    TurboCodec::new(spec)?.encode(info_bits)
}

/// Decodes channel LLRs under `spec`.
pub fn turbo_decode(llr: &[f64], spec: TurboCodeSpec) -> Result<Vec<u8>> {
    TurboCodec::new(spec)?.decode(llr)
}
