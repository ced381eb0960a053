//! Monte Carlo experiment runner: configuration, trials, sweeps and CSV.

mod capture;
mod config;
mod frame;
mod selftest;
mod sweep;
mod trial;

pub use capture::{dump_capture, replay_capture};
pub use config::{
    apply_override, load_config_file, parse_config_str, ConfigMap, ExperimentConfig, ExperimentKind, Method,
    NormalizeMode,
};
pub use frame::{
    frame_trial, frame_truth, receive_frame, sync_trial, sync_window, synchronize, transmit, FrameTruth, ReceivedStream,
};
pub use selftest::{posterior_deviation, random_posterior_case, run_selftest, SuiteResult};
pub use sweep::{methods, run_cell, run_sweep, tabulate, to_db, write_csv, write_trial_log, Cell, Table};
pub use trial::{receive_slot, run_trial, Scenario, SlotOutcome, SlotSamples, SlotTruth, Stage, TrialMetrics};
