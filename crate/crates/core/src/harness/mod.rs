//! Factorial prior-sensitivity sweeps: settings, configuration, the sweep
//! runner and the prior-recovery gate.

mod config;
mod setting;
mod sweep;
mod validate;

pub use config::{parse_kv, split_list, SweepConfig};
pub use setting::{B0Rule, MfmSetting, DEFAULT_PRECISION_SHAPE};
pub use sweep::{
    enumerate_settings, run_sweep, setting_seed, summary_csv, summary_rows_csv, trace_path, SettingOutcome,
    SettingStatus, SweepReport, MANIFEST_FILE, MARGINALS_FILE, SUMMARY_FILE, SUMMARY_HEADER, TRACE_DIR,
};
pub use validate::{check_prior_recovery, validate_priors, PriorCheck, PRIOR_TV_THRESHOLD};
