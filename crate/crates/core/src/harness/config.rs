//! Flat `key = value` experiment files.
//!
//! ```text
//! # comment
//! include = common.cfg      # path relative to the including file
//! kind = ber-vs-snr
//! snr_db = 6, 8, 10         # lists are comma separated; 6:2:14 is a range
//! ```
//!
//! Later assignments override earlier ones, so keys after an `include`
//! replace the included values.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::channel::DEFAULT_PROFILE_DB;
use crate::coding::CodeRate;
use crate::error::{Error, Result};
use crate::framing::{PssPlacement, DEFAULT_PILOT_SEED, DEFAULT_ZC_ROOT};
use crate::gturbo::{AlphaRule, V_MIN};

const MAX_INCLUDE_DEPTH: usize = 16;

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Raw key/value pairs after include expansion.
pub type ConfigMap = BTreeMap<String, String>;

fn parse_into(text: &str, base: Option<&Path>, depth: usize, map: &mut ConfigMap) -> Result<()> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(cfg_err("include nesting too deep (cycle?)"));
    }
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| cfg_err(format!("line {}: expected 'key = value', got '{line}'", no + 1)))?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim().to_string());
        if key.is_empty() {
            return Err(cfg_err(format!("line {}: empty key", no + 1)));
        }
        if key == "include" {
            let path = match base {
                Some(dir) => dir.join(&value),
                None => PathBuf::from(&value),
            };
            let inner =
                fs::read_to_string(&path).map_err(|e| cfg_err(format!("cannot include {}: {e}", path.display())))?;
            parse_into(&inner, path.parent(), depth + 1, map)?;
        } else {
            map.insert(key, value);
        }
    }
    Ok(())
}

/// Parses config text; includes resolve relative to `base`.
pub fn parse_config_str(text: &str, base: Option<&Path>) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    parse_into(text, base, 0, &mut map)?;
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<ConfigMap> {
    let text = fs::read_to_string(path).map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, path.parent())
}

/// Applies a `key=value` override.
pub fn apply_override(map: &mut ConfigMap, spec: &str) -> Result<()> {
    let (k, v) = spec.split_once('=').ok_or_else(|| cfg_err(format!("override '{spec}' is not key=value")))?;
    map.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    NmseVsIter,
    NmseVsSnr,
    BerVsIter,
    BerVsSnr,
    SyncSto,
    EndToEndFrame,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "nmse-vs-iter" => Self::NmseVsIter,
            "nmse-vs-snr" => Self::NmseVsSnr,
            "ber-vs-iter" => Self::BerVsIter,
            "ber-vs-snr" => Self::BerVsSnr,
            "sync-sto" => Self::SyncSto,
            "end-to-end-frame" => Self::EndToEndFrame,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NmseVsIter => "nmse-vs-iter",
            Self::NmseVsSnr => "nmse-vs-snr",
            Self::BerVsIter => "ber-vs-iter",
            Self::BerVsSnr => "ber-vs-snr",
            Self::SyncSto => "sync-sto",
            Self::EndToEndFrame => "end-to-end-frame",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Receiver under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Quantization-aware iterative estimator and detector.
    GTurbo,
    /// LS/LMMSE estimate, one-tap equalizer.
    Conventional,
    /// Unquantized reference through the same estimator/detector.
    FullResolution,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gturbo" => Self::GTurbo,
            "conventional" => Self::Conventional,
            "full" | "full-resolution" => Self::FullResolution,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::GTurbo => "gturbo",
            Self::Conventional => "conventional",
            Self::FullResolution => "full",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeMode {
    /// On for one-bit quantization only.
    Auto,
    On,
    Off,
}

impl NormalizeMode {
    pub fn enabled(self, bits: u32) -> bool {
        match self {
            Self::Auto => bits == 1,
            Self::On => true,
            Self::Off => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub n_d: usize,
    pub bits: Vec<u32>,
    pub modulation: usize,
    pub rate: CodeRate,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub trial_start: u64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub t_est: usize,
    pub t_det: usize,
    pub normalize: NormalizeMode,
    pub mismatch: bool,
    pub mismatch_range: f64,
    pub taps_db: Vec<f64>,
    /// Assumed tap count; `None` picks 4 (perfect) or 6 (mismatched).
    pub l_hat: Option<usize>,
    pub gamma2: f64,
    pub alpha: AlphaRule,
    pub v_floor: f64,
    pub turbo_iterations: usize,
    pub pilot_seed: u64,
    pub zc_root: u32,
    pub pss: PssPlacement,
    /// Synchronization search window in samples; `None` is one slot.
    pub sync_window: Option<usize>,
    /// Samples by which the frame receiver starts its DFT windows ahead of
    /// the detected timing; the assumed tap span grows by twice this.
    pub timing_backoff: usize,
    /// Include quantizer distortion in the conventional receiver's LLR variance.
    pub baseline_distortion: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::BerVsSnr,
            n: 2048,
            n_d: 1186,
            bits: vec![1],
            modulation: 4,
            rate: CodeRate::Half,
            snr_db: vec![12.0],
            trials: 200,
            trial_start: 0,
            seed: 1,
            methods: vec![Method::GTurbo],
            t_est: 10,
            t_det: 10,
            normalize: NormalizeMode::Auto,
            mismatch: false,
            mismatch_range: 0.3,
            taps_db: DEFAULT_PROFILE_DB.to_vec(),
            l_hat: None,
            gamma2: 1e-5,
            alpha: AlphaRule::DiagonalMean,
            v_floor: V_MIN,
            turbo_iterations: 8,
            pilot_seed: DEFAULT_PILOT_SEED,
            zc_root: DEFAULT_ZC_ROOT,
            pss: PssPlacement::Twice,
            sync_window: None,
            timing_backoff: 4,
            baseline_distortion: true,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| cfg_err(format!("{key}: cannot parse '{v}'")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" => Ok(false),
        _ => Err(cfg_err(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

/// SNR list: comma-separated values and/or `start:step:stop` ranges.
fn snr_list(v: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let f: Vec<&str> = part.split(':').collect();
        match f.len() {
            1 => out.push(num("snr_db", f[0])?),
            3 => {
                let (a, s, b): (f64, f64, f64) = (num("snr_db", f[0])?, num("snr_db", f[1])?, num("snr_db", f[2])?);
                if !(s > 0.0) || b < a {
                    return Err(cfg_err(format!("snr_db: bad range '{part}'")));
                }
                let steps = ((b - a) / s + 1e-9).floor() as usize;
                out.extend((0..=steps).map(|i| a + i as f64 * s));
            }
            _ => return Err(cfg_err(format!("snr_db: bad entry '{part}'"))),
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let mut c = Self::default();
        for (key, v) in map {
            let v = v.as_str();
            match key.as_str() {
                "kind" => c.kind = ExperimentKind::parse(v).ok_or_else(|| cfg_err(format!("unknown kind '{v}'")))?,
                "n" => c.n = num(key, v)?,
                "n_d" => c.n_d = num(key, v)?,
                "bits" | "b" => c.bits = list(key, v)?,
                "modulation" => {
                    c.modulation = match v.to_ascii_lowercase().as_str() {
                        "4" | "qpsk" | "4qam" | "4-qam" => 4,
                        "16" | "16qam" | "16-qam" => 16,
                        _ => return Err(cfg_err(format!("unsupported modulation '{v}'"))),
                    }
                }
                "rate" => c.rate = CodeRate::parse(v).ok_or_else(|| cfg_err(format!("unsupported rate '{v}'")))?,
                "snr_db" => c.snr_db = snr_list(v)?,
                "trials" => c.trials = num(key, v)?,
                "trial_start" => c.trial_start = num(key, v)?,
                "seed" => c.seed = num(key, v)?,
                "methods" | "method" => {
                    c.methods = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| Method::parse(s).ok_or_else(|| cfg_err(format!("unknown method '{s}'"))))
                        .collect::<Result<_>>()?
                }
                "t_est" => c.t_est = num(key, v)?,
                "t_det" => c.t_det = num(key, v)?,
                "normalize" => {
                    c.normalize = match v {
                        "auto" => NormalizeMode::Auto,
                        _ if boolean(key, v)? => NormalizeMode::On,
                        _ => NormalizeMode::Off,
                    }
                }
                "mismatch" => c.mismatch = boolean(key, v)?,
                "mismatch_range" => c.mismatch_range = num(key, v)?,
                "taps_db" => c.taps_db = list(key, v)?,
                "l_hat" => c.l_hat = if v == "auto" { None } else { Some(num(key, v)?) },
                "gamma2" => c.gamma2 = num(key, v)?,
                "alpha" => {
                    c.alpha = match v {
                        "diagonal" => AlphaRule::DiagonalMean,
                        "pilot" => AlphaRule::PilotWeighted,
                        _ => return Err(cfg_err(format!("alpha: expected diagonal|pilot, got '{v}'"))),
                    }
                }
                "v_floor" => c.v_floor = num(key, v)?,
                "turbo_iterations" => c.turbo_iterations = num(key, v)?,
                "pilot_seed" => {
                    c.pilot_seed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
                        Some(hex) => u64::from_str_radix(hex, 16).map_err(|_| cfg_err(format!("pilot_seed: '{v}'")))?,
                        None => num(key, v)?,
                    }
                }
                "zc_root" => c.zc_root = num(key, v)?,
                "pss" => {
                    c.pss = match v {
                        "twice" => PssPlacement::Twice,
                        "slots0to10" => PssPlacement::Slots0To10,
                        _ => return Err(cfg_err(format!("pss: expected twice|slots0to10, got '{v}'"))),
                    }
                }
                "sync_window" => c.sync_window = if v == "slot" { None } else { Some(num(key, v)?) },
                "timing_backoff" => c.timing_backoff = num(key, v)?,
                "baseline_distortion" => c.baseline_distortion = boolean(key, v)?,
                _ => return Err(cfg_err(format!("unknown key '{key}'"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(cfg_err(m.to_string()));
        if !self.n.is_power_of_two() || self.n < 64 {
            return fail("n must be a power of two >= 64");
        }
        if self.n_d == 0 || self.n_d >= self.n || !self.n_d.is_multiple_of(2) {
            return fail("n_d must be even and below n");
        }
        if self.bits.is_empty() || self.bits.iter().any(|b| !(1..=5).contains(b)) {
            return fail("bits must be in 1..=5");
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return fail("snr_db must list at least one finite value");
        }
        if self.trials == 0 || self.t_est == 0 || self.t_det == 0 || self.turbo_iterations == 0 {
            return fail("trials and iteration counts must be positive");
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty");
        }
        if self.taps_db.is_empty() || self.taps_db.len() >= self.n {
            return fail("taps_db must list between 1 and n-1 taps");
        }
        if self.l_hat == Some(0) || !(self.gamma2 > 0.0) {
            return fail("l_hat must be >= 1 and gamma2 > 0");
        }
        if !(0.0..1.0).contains(&self.mismatch_range) {
            return fail("mismatch_range must be in [0, 1)");
        }
        Ok(())
    }

    /// Key/value form accepted back by [`ExperimentConfig::from_map`].
    pub fn to_map(&self) -> ConfigMap {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let mut m = ConfigMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("kind", self.kind.to_string());
        put("n", self.n.to_string());
        put("n_d", self.n_d.to_string());
        put("bits", join(&self.bits));
        put("modulation", self.modulation.to_string());
        put("rate", self.rate.to_string());
        put("snr_db", join(&self.snr_db));
        put("trials", self.trials.to_string());
        put("trial_start", self.trial_start.to_string());
        put("seed", self.seed.to_string());
        put("methods", join(&self.methods));
        put("t_est", self.t_est.to_string());
        put("t_det", self.t_det.to_string());
        put(
            "normalize",
            match self.normalize {
                NormalizeMode::Auto => "auto",
                NormalizeMode::On => "on",
                NormalizeMode::Off => "off",
            }
            .into(),
        );
        put("mismatch", self.mismatch.to_string());
        put("mismatch_range", self.mismatch_range.to_string());
        put("taps_db", join(&self.taps_db));
        put("l_hat", self.l_hat.map_or("auto".into(), |l| l.to_string()));
        put("gamma2", self.gamma2.to_string());
        put(
            "alpha",
            match self.alpha {
                AlphaRule::DiagonalMean => "diagonal",
                AlphaRule::PilotWeighted => "pilot",
            }
            .into(),
        );
        put("v_floor", self.v_floor.to_string());
        put("turbo_iterations", self.turbo_iterations.to_string());
        put("pilot_seed", self.pilot_seed.to_string());
        put("zc_root", self.zc_root.to_string());
        put(
            "pss",
            match self.pss {
                PssPlacement::Twice => "twice",
                PssPlacement::Slots0To10 => "slots0to10",
            }
            .into(),
        );
        put("sync_window", self.sync_window.map_or("slot".into(), |w| w.to_string()));
        put("timing_backoff", self.timing_backoff.to_string());
        put("baseline_distortion", self.baseline_distortion.to_string());
        m
    }

    /// Assumed tap count after applying the perfect/mismatched default.
    pub fn effective_l_hat(&self) -> usize {
        self.l_hat.unwrap_or(if self.mismatch { 6 } else { 4 })
    }

    pub fn trial_range(&self) -> std::ops::Range<u64> {
        self.trial_start..self.trial_start + self.trials
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("common.cfg"), "n = 256\nn_d = 148\ntrials = 5 # few\n").unwrap();
        let text = "include = common.cfg\nkind = nmse-vs-iter\nsnr_db = 6:2:10, 15\nbits = 1,2\ntrials = 7\nmethods = gturbo, conventional\npilot_seed = 0x5EED\n";
        let mut map = parse_config_str(text, Some(dir.path())).unwrap();
        apply_override(&mut map, "seed=9").unwrap();
        let c = ExperimentConfig::from_map(&map).unwrap();
        assert_eq!(c.kind, ExperimentKind::NmseVsIter);
        assert_eq!((c.n, c.n_d, c.trials, c.seed), (256, 148, 7, 9));
        assert_eq!(c.snr_db, vec![6.0, 8.0, 10.0, 15.0]);
        assert_eq!(c.bits, vec![1, 2]);
        assert_eq!(c.methods, vec![Method::GTurbo, Method::Conventional]);
        assert_eq!(c.pilot_seed, 0x5EED);
        assert_eq!(c.effective_l_hat(), 4);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |t: &str| ExperimentConfig::from_map(&parse_config_str(t, None).unwrap()).unwrap_err();
        assert!(matches!(bad("colour = red"), Error::Config(_)));
        assert!(matches!(bad("bits = 7"), Error::Config(_)));
        assert!(matches!(bad("kind = plot"), Error::Config(_)));
        assert!(matches!(bad("n_d = 4096"), Error::Config(_)));
        assert!(parse_config_str("no equals sign", None).is_err());
        assert!(parse_config_str("include = /nonexistent/x.cfg", None).is_err());
        let mut m = ConfigMap::new();
        assert!(apply_override(&mut m, "novalue").is_err());
    }

    #[test]
    fn include_cycle_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.cfg"), "include = a.cfg\n").unwrap();
        assert!(load_config_file(&dir.path().join("a.cfg")).is_err());
    }

    #[test]
    fn map_round_trip() {
        let c = ExperimentConfig {
            kind: ExperimentKind::SyncSto,
            snr_db: vec![6.5, 9.0],
            l_hat: Some(7),
            sync_window: Some(300),
            methods: vec![Method::FullResolution, Method::Conventional],
            normalize: NormalizeMode::Off,
            alpha: AlphaRule::PilotWeighted,
            pss: PssPlacement::Slots0To10,
            rate: CodeRate::Third,
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::from_map(&c.to_map()).unwrap(), c);
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_map(&d.to_map()).unwrap(), d);
    }

    #[test]
    fn mismatch_defaults() {
        let c = ExperimentConfig::from_map(&parse_config_str("mismatch = on", None).unwrap()).unwrap();
        assert_eq!(c.effective_l_hat(), 6);
        assert!(NormalizeMode::Auto.enabled(1) && !NormalizeMode::Auto.enabled(2));
    }
}
