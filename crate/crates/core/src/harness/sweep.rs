//! Sweeps over (SNR, B, method) cells, aggregation and CSV output.
//!
//! CSV schemas, one row per cell (and per iteration for the `-vs-iter` kinds):
//!
//! | kind             | columns |
//! |------------------|---------|
//! | nmse-vs-iter/snr | snr_db, method, b, iter, nmse_db, trials, failed |
//! | ber-vs-iter      | snr_db, method, b, modulation, iter, uncoded_ber, trials, failed |
//! | ber-vs-snr       | snr_db, method, b, modulation, uncoded_ber, coded_ber, per, trials, failed |
//! | sync-sto         | snr_db, b, sto, count, probability, trials, failed |
//! | end-to-end-frame | snr_db, method, b, modulation, nmse_db, uncoded_ber, coded_ber, per, p_sto0, trials, failed |
//!
//! `trials` counts successful trials; `failed` counts trials that returned
//! an error. Means are over successful trials (NMSE averaged linearly, then
//! converted to dB).

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::parallel::{map_trials, ExecutionMode};

use super::config::{ExperimentConfig, ExperimentKind, Method};
use super::frame::{frame_trial, sync_trial};
use super::trial::{run_trial, Scenario, TrialMetrics};

/// Results of one (SNR, B, method) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub snr_db: f64,
    pub bits: u32,
    pub method: Method,
    pub metrics: Vec<TrialMetrics>,
    /// Trials that errored, with their messages.
    pub failed: Vec<(u64, String)>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn mean_trace(traces: Vec<&[f64]>) -> Vec<f64> {
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    (0..len).map(|i| mean(traces.iter().map(|t| t[i])).unwrap_or(f64::NAN)).collect()
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

impl Cell {
    /// Mean linear NMSE per estimator iteration.
    pub fn nmse_trace(&self) -> Vec<f64> {
        mean_trace(self.metrics.iter().map(|m| m.nmse_trace.as_slice()).collect())
    }

    /// Mean uncoded BER per detector iteration.
    pub fn ber_trace(&self) -> Vec<f64> {
        mean_trace(self.metrics.iter().map(|m| m.ber_trace.as_slice()).collect())
    }

    pub fn nmse(&self) -> Option<f64> {
        mean(self.metrics.iter().filter_map(TrialMetrics::nmse))
    }

    pub fn uncoded_ber(&self) -> Option<f64> {
        mean(self.metrics.iter().filter_map(TrialMetrics::uncoded_ber))
    }

    pub fn coded_ber(&self) -> Option<f64> {
        mean(self.metrics.iter().filter_map(|m| m.coded_ber))
    }

    pub fn per(&self) -> Option<f64> {
        mean(self.metrics.iter().filter_map(|m| m.per))
    }

    pub fn sto_histogram(&self) -> BTreeMap<i64, u64> {
        let mut h = BTreeMap::new();
        for s in self.metrics.iter().filter_map(|m| m.sto) {
            *h.entry(s).or_insert(0) += 1;
        }
        h
    }

    /// Fraction of successful trials whose STO satisfies `pred`.
    pub fn sto_rate(&self, pred: impl Fn(i64) -> bool) -> Option<f64> {
        mean(self.metrics.iter().filter_map(|m| m.sto).map(|s| if pred(s) { 1.0 } else { 0.0 }))
    }
}

/// Runs every trial of one cell; trial errors are recorded, not propagated.
pub fn run_cell(scn: &Scenario, snr_db: f64, bits: u32, method: Method, mode: ExecutionMode) -> Cell {
    let kind = scn.cfg.kind;
    let results = map_trials(scn.cfg.trial_range(), mode, |t| match kind {
        ExperimentKind::SyncSto => sync_trial(scn, snr_db, bits, t),
        ExperimentKind::EndToEndFrame => frame_trial(scn, snr_db, bits, method, t),
        _ => run_trial(scn, snr_db, bits, method, t),
    });
    let mut metrics = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (t, r) in scn.cfg.trial_range().zip(results) {
        match r {
            Ok(m) => metrics.push(m),
            Err(e) => failed.push((t, e.to_string())),
        }
    }
    Cell { snr_db, bits, method, metrics, failed }
}

/// Methods swept for a configuration (synchronization has none).
pub fn methods(cfg: &ExperimentConfig) -> Vec<Method> {
    if cfg.kind == ExperimentKind::SyncSto {
        vec![Method::GTurbo]
    } else {
        cfg.methods.clone()
    }
}

/// All cells of a configuration, in (SNR, B, method) order.
pub fn run_sweep(cfg: &ExperimentConfig, mode: ExecutionMode) -> Result<Vec<Cell>> {
    let scn = Scenario::new(cfg)?;
    let mut cells = Vec::new();
    for &snr in &cfg.snr_db {
        for &bits in &cfg.bits {
            for method in methods(cfg) {
                cells.push(run_cell(&scn, snr, bits, method, mode));
            }
        }
    }
    Ok(cells)
}

/// Header plus rows of formatted CSV fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |v| v.to_string())
}

pub fn tabulate(cfg: &ExperimentConfig, cells: &[Cell]) -> Table {
    use ExperimentKind::*;
    let header: Vec<&'static str> = match cfg.kind {
        NmseVsIter | NmseVsSnr => vec!["snr_db", "method", "b", "iter", "nmse_db", "trials", "failed"],
        BerVsIter => vec!["snr_db", "method", "b", "modulation", "iter", "uncoded_ber", "trials", "failed"],
        BerVsSnr => {
            vec!["snr_db", "method", "b", "modulation", "uncoded_ber", "coded_ber", "per", "trials", "failed"]
        }
        SyncSto => vec!["snr_db", "b", "sto", "count", "probability", "trials", "failed"],
        EndToEndFrame => vec![
            "snr_db",
            "method",
            "b",
            "modulation",
            "nmse_db",
            "uncoded_ber",
            "coded_ber",
            "per",
            "p_sto0",
            "trials",
            "failed",
        ],
    };
    let mut rows = Vec::new();
    for c in cells {
        let (snr, method, b) = (c.snr_db.to_string(), c.method.to_string(), c.bits.to_string());
        let (ok, failed) = (c.metrics.len().to_string(), c.failed.len().to_string());
        let modulation = cfg.modulation.to_string();
        match cfg.kind {
            NmseVsIter => {
                for (i, v) in c.nmse_trace().iter().enumerate() {
                    rows.push(vec![
                        snr.clone(),
                        method.clone(),
                        b.clone(),
                        (i + 1).to_string(),
                        to_db(*v).to_string(),
                        ok.clone(),
                        failed.clone(),
                    ]);
                }
            }
            NmseVsSnr => rows.push(vec![snr, method, b, cfg.t_est.to_string(), opt(c.nmse().map(to_db)), ok, failed]),
            BerVsIter => {
                for (i, v) in c.ber_trace().iter().enumerate() {
                    rows.push(vec![
                        snr.clone(),
                        method.clone(),
                        b.clone(),
                        modulation.clone(),
                        (i + 1).to_string(),
                        v.to_string(),
                        ok.clone(),
                        failed.clone(),
                    ]);
                }
            }
            BerVsSnr => rows.push(vec![
                snr,
                method,
                b,
                modulation,
                opt(c.uncoded_ber()),
                opt(c.coded_ber()),
                opt(c.per()),
                ok,
                failed,
            ]),
            SyncSto => {
                let total = c.metrics.len() as f64;
                for (sto, count) in c.sto_histogram() {
                    rows.push(vec![
                        snr.clone(),
                        b.clone(),
                        sto.to_string(),
                        count.to_string(),
                        (count as f64 / total).to_string(),
                        ok.clone(),
                        failed.clone(),
                    ]);
                }
            }
            EndToEndFrame => rows.push(vec![
                snr,
                method,
                b,
                modulation,
                opt(c.nmse().map(to_db)),
                opt(c.uncoded_ber()),
                opt(c.coded_ber()),
                opt(c.per()),
                opt(c.sto_rate(|s| s == 0)),
                ok,
                failed,
            ]),
        }
    }
    Table { header, rows }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::InvalidArgument(format!("CSV output failed: {other:?}")),
    }
}

pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-trial log: one row per trial of every cell, failures included.
pub fn write_trial_log<W: Write>(cells: &[Cell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "snr_db",
        "method",
        "b",
        "trial",
        "status",
        "nmse",
        "uncoded_ber",
        "coded_ber",
        "per",
        "sto",
        "error",
    ])
    .map_err(csv_err)?;
    for c in cells {
        let key = [c.snr_db.to_string(), c.method.to_string(), c.bits.to_string()];
        let mut rows: Vec<(u64, Vec<String>)> = c
            .metrics
            .iter()
            .map(|m| {
                let fields = vec![
                    "ok".to_string(),
                    opt(m.nmse()),
                    opt(m.uncoded_ber()),
                    opt(m.coded_ber),
                    opt(m.per),
                    m.sto.map_or_else(String::new, |s| s.to_string()),
                    String::new(),
                ];
                (m.trial, fields)
            })
            .collect();
        for (t, msg) in &c.failed {
            let mut fields = vec!["failed".to_string()];
            fields.extend(std::iter::repeat_n(String::new(), 5));
            fields.push(msg.clone());
            rows.push((*t, fields));
        }
        rows.sort_by_key(|(t, _)| *t);
        for (t, fields) in rows {
            let record = key.iter().cloned().chain(std::iter::once(t.to_string())).chain(fields);
            w.write_record(record).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
