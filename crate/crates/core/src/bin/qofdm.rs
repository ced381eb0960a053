use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qofdm::harness::frame_trial;
use qofdm::harness::{
    apply_override, dump_capture, load_config_file, methods, replay_capture, run_selftest, run_sweep, run_trial,
    sync_trial, tabulate, to_db, write_csv, write_trial_log, ConfigMap, ExperimentConfig, ExperimentKind, Method,
    Scenario, TrialMetrics,
};
use qofdm::parallel::{with_threads, ExecutionMode};
use qofdm::Error;

#[derive(Parser)]
#[command(name = "qofdm", version, about = "Quantized-receiver OFDM link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Extra `key=value` assignments applied after the file.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial of every cell and print its metrics.
    Run {
        #[command(flatten)]
        common: Common,
        /// Trial index (default: the configured first trial).
        #[arg(long)]
        trial: Option<u64>,
    },
    /// Run all trials of all cells and write the aggregated CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// CSV output (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-trial CSV log.
        #[arg(long)]
        trial_log: Option<PathBuf>,
        /// Run trials on the calling thread only.
        #[arg(long)]
        sequential: bool,
    },
    /// Write or decode received-frame capture files.
    Capture {
        #[command(subcommand)]
        action: CaptureAction,
    },
    /// Run the built-in oracle suites.
    Selftest {
        /// Random Module A cases checked against quadrature.
        #[arg(long, default_value_t = 2000)]
        cases: usize,
    },
}

#[derive(Subcommand)]
enum CaptureAction {
    /// Simulate one frame and store the received samples.
    Dump {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Decode a stored frame and print its error rates.
    Replay {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "gturbo")]
        method: String,
    },
}

fn load(common: &Common) -> qofdm::Result<ExperimentConfig> {
    let mut map = match &common.config {
        Some(p) => load_config_file(p)?,
        None => ConfigMap::new(),
    };
    if let Some(s) = common.seed {
        map.insert("seed".into(), s.to_string());
    }
    if let Some(t) = common.trials {
        map.insert("trials".into(), t.to_string());
    }
    for o in &common.overrides {
        apply_override(&mut map, o)?;
    }
    ExperimentConfig::from_map(&map)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.6e}"))
}

fn describe(m: &TrialMetrics) -> String {
    format!(
        "nmse_db={} uncoded_ber={} coded_ber={} per={} sto={} clamps={}",
        m.nmse().map_or_else(|| "-".into(), |v| format!("{:.3}", to_db(v))),
        fmt_opt(m.uncoded_ber()),
        fmt_opt(m.coded_ber),
        fmt_opt(m.per),
        m.sto.map_or_else(|| "-".into(), |s| s.to_string()),
        m.clamps.total()
    )
}

fn create(path: &Path) -> qofdm::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?))
}

fn execute(cmd: Command) -> qofdm::Result<()> {
    match cmd {
        Command::Run { common, trial } => {
            let cfg = load(&common)?;
            let t = trial.unwrap_or(cfg.trial_start);
            let scn = Scenario::new(&cfg)?;
            for &snr in &cfg.snr_db {
                for &bits in &cfg.bits {
                    for method in methods(&cfg) {
                        let m = match cfg.kind {
                            ExperimentKind::SyncSto => sync_trial(&scn, snr, bits, t),
                            ExperimentKind::EndToEndFrame => frame_trial(&scn, snr, bits, method, t),
                            _ => run_trial(&scn, snr, bits, method, t),
                        }?;
                        println!("snr_db={snr} b={bits} method={method} trial={t} {}", describe(&m));
                    }
                }
            }
        }
        Command::Sweep { common, out, trial_log, sequential } => {
            let cfg = load(&common)?;
            let mode = if sequential { ExecutionMode::Sequential } else { ExecutionMode::Parallel };
            let cells = with_threads(common.threads, || run_sweep(&cfg, mode))??;
            let table = tabulate(&cfg, &cells);
            match out {
                Some(p) => write_csv(&table, create(&p)?)?,
                None => write_csv(&table, io::stdout().lock())?,
            }
            if let Some(p) = trial_log {
                write_trial_log(&cells, create(&p)?)?;
            }
            let failed: usize = cells.iter().map(|c| c.failed.len()).sum();
            if failed > 0 {
                eprintln!("warning: {failed} trial(s) failed; see the 'failed' column");
            }
        }
        Command::Capture { action: CaptureAction::Dump { common, out, trial } } => {
            let cfg = load(&common)?;
            let meta = dump_capture(&cfg, trial, &out)?;
            eprintln!("wrote {} (pss_position = {})", out.display(), meta.extra["pss_position"]);
        }
        Command::Capture { action: CaptureAction::Replay { input, method } } => {
            let method = Method::parse(&method).ok_or_else(|| Error::Config(format!("unknown method '{method}'")))?;
            let (cfg, m) = replay_capture(&input, method)?;
            println!("snr_db={} b={} method={method} {}", cfg.snr_db[0], cfg.bits[0], describe(&m));
            println!("PER {}", fmt_opt(m.per));
        }
        Command::Selftest { cases } => {
            let suites = run_selftest(cases);
            let mut failed = 0;
            for s in &suites {
                println!("{:<28} passed {:>5}  failed {:>5}", s.name, s.passed, s.failed);
                failed += s.failed;
            }
            if failed > 0 {
                return Err(Error::InvalidArgument(format!("{failed} oracle check(s) failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
