use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dataset::{load_dataset, Dataset};
use crate::error::{MfmError, Result};
use crate::prior_k::DirichletSchedule;
use crate::sampler::{run_chain, ChainTrace, Likelihood, Protocol};
use crate::summaries::{marginal_table, summarize_kplus, KPlusPosteriorSummary};

use super::config::SweepConfig;
use super::setting::MfmSetting;

/// All settings of the grid, ordered by schedule kind, Dirichlet value,
/// prior on `K`, `B0`, `C0` (last factor varying fastest).
pub fn enumerate_settings(config: &SweepConfig) -> Result<Vec<MfmSetting>> {
    let grids = [
        ("grid.prior_k", config.priors.len()),
        ("grid.kind", config.kinds.len()),
        ("grid.gamma_or_alpha", config.dirichlet_values.len()),
        ("grid.B0", config.mean_variances.len()),
        ("grid.C0", config.precision_rates.len()),
    ];
    if let Some((name, _)) = grids.iter().find(|(_, len)| *len == 0) {
        return Err(MfmError::Config(format!("{name} is empty")));
    }
    let mut out = Vec::with_capacity(config.grid_size());
    for &kind in &config.kinds {
        for &value in &config.dirichlet_values {
            let schedule = DirichletSchedule::new(kind, value)?;
            for &prior_k in &config.priors {
                for &b in &config.mean_variances {
                    for &c in &config.precision_rates {
                        let mut s = MfmSetting::new(prior_k, schedule, b, c)?;
                        s.precision_shape = config.precision_shape;
                        s.b0_rule = config.b0_rule;
                        out.push(s);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Chain seed of one setting: the first 8 bytes (little endian) of
/// SHA-256 over `"<base_seed>/<setting_id>"`.
pub fn setting_seed(base_seed: u64, setting_id: &str) -> u64 {
    let digest = Sha256::digest(format!("{base_seed}/{setting_id}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SettingStatus {
    /// The chain ran in this invocation.
    Completed,
    /// A complete trace from an earlier invocation was reused.
    Reused,
    Failed(String),
}

impl SettingStatus {
    pub fn as_str(&self) -> &str {
        match self {
            SettingStatus::Completed => "completed",
            SettingStatus::Reused => "reused",
            SettingStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SettingOutcome {
    pub setting: MfmSetting,
    pub setting_id: String,
    pub seed: u64,
    pub status: SettingStatus,
    pub summary: Option<KPlusPosteriorSummary>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub outcomes: Vec<SettingOutcome>,
    pub summary_path: PathBuf,
    pub manifest_path: PathBuf,
    /// Written only when every setting succeeded.
    pub marginals_path: Option<PathBuf>,
}

impl SweepReport {
    pub fn failures(&self) -> impl Iterator<Item = &SettingOutcome> {
        self.outcomes
            .iter()
            .filter(|o| matches!(o.status, SettingStatus::Failed(_)))
    }
}

pub const TRACE_DIR: &str = "traces";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MARGINALS_FILE: &str = "marginals.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn trace_path(output_dir: &Path, setting_id: &str) -> PathBuf {
    output_dir.join(TRACE_DIR).join(format!("{setting_id}.csv"))
}

/// Runs every setting of the grid on a pool of `config.workers` threads.
///
/// Traces already present with the expected number of draws are reused, so a
/// rerun only fills in what is missing. Failures of single settings are
/// recorded in the manifest and do not stop the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    let started = Instant::now();
    let data = load_dataset(&config.data)?;
    let settings = enumerate_settings(config)?;
    let trace_dir = config.output_dir.join(TRACE_DIR);
    std::fs::create_dir_all(&trace_dir).map_err(|e| MfmError::io(&trace_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| MfmError::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<SettingOutcome> = pool.install(|| {
        settings
            .par_iter()
            .map(|s| run_setting(&data, s, config))
            .collect()
    });

    let summary_path = config.output_dir.join(SUMMARY_FILE);
    write_atomic(&summary_path, &summary_csv(&outcomes)?)?;

    let mut marginals_path = None;
    let finished: Vec<(MfmSetting, usize)> = outcomes
        .iter()
        .filter_map(|o| o.summary.as_ref().map(|s| (o.setting, s.mode)))
        .collect();
    if finished.len() == outcomes.len() {
        let path = config.output_dir.join(MARGINALS_FILE);
        write_atomic(&path, &marginal_table(&finished)?.to_csv())?;
        marginals_path = Some(path);
    }

    let manifest_path = config.output_dir.join(MANIFEST_FILE);
    write_atomic(
        &manifest_path,
        &manifest_text(config, &outcomes, started.elapsed().as_secs_f64()),
    )?;
    Ok(SweepReport {
        outcomes,
        summary_path,
        manifest_path,
        marginals_path,
    })
}

fn run_setting(data: &Dataset, setting: &MfmSetting, config: &SweepConfig) -> SettingOutcome {
    let id = setting.setting_id();
    let seed = setting_seed(config.protocol.seed, &id);
    let path = trace_path(&config.output_dir, &id);
    let protocol = Protocol {
        seed,
        ..config.protocol
    };
    let t0 = Instant::now();
    let mut status = SettingStatus::Completed;

    let trace: Result<ChainTrace> = match ChainTrace::read_csv(&path) {
        Ok(t) if t.len() == protocol.recorded_len() => {
            status = SettingStatus::Reused;
            Ok(t)
        }
        _ => setting.model(data).and_then(|model| {
            let t = run_chain(data.values(), &model, &protocol, Likelihood::Normal)?;
            t.write_csv(&path)?;
            Ok(t)
        }),
    };
    let summary = trace.and_then(|t| summarize_kplus(&t));
    let summary = match summary {
        Ok(s) => Some(s),
        Err(e) => {
            status = SettingStatus::Failed(e.to_string());
            None
        }
    };
    SettingOutcome {
        setting: *setting,
        setting_id: id,
        seed,
        status,
        summary,
        wall_time_secs: t0.elapsed().as_secs_f64(),
    }
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "setting_id",
    "mfm_kind",
    "prior_k",
    "gamma_or_alpha",
    "B0",
    "C0",
    "mode",
    "entropy",
    "hist_json",
];

/// One row per setting with a summary, in grid order.
pub fn summary_csv(outcomes: &[SettingOutcome]) -> Result<String> {
    let rows: Vec<(MfmSetting, &KPlusPosteriorSummary)> = outcomes
        .iter()
        .filter_map(|o| o.summary.as_ref().map(|s| (o.setting, s)))
        .collect();
    summary_rows_csv(&rows)
}

pub fn summary_rows_csv(rows: &[(MfmSetting, &KPlusPosteriorSummary)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| MfmError::Config(format!("cannot encode summary: {e}"));
    w.write_record(SUMMARY_HEADER).map_err(fail)?;
    for (s, sum) in rows {
        w.write_record([
            s.setting_id(),
            s.schedule.kind().to_string(),
            s.prior_k.to_string(),
            s.schedule.value().to_string(),
            s.mean_variance.to_string(),
            s.precision_rate.to_string(),
            sum.mode.to_string(),
            sum.entropy.to_string(),
            sum.hist_json(),
        ])
        .map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| MfmError::Config(format!("cannot encode summary: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn manifest_text(config: &SweepConfig, outcomes: &[SettingOutcome], wall: f64) -> String {
    let mut out = String::from("# sweep manifest\n");
    out.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&config.to_text());
    out.push_str(&format!("settings = {}\n", outcomes.len()));
    let failed = outcomes
        .iter()
        .filter(|o| matches!(o.status, SettingStatus::Failed(_)))
        .count();
    out.push_str(&format!("failed = {failed}\n"));
    out.push_str(&format!("wall_time_s = {wall:.3}\n"));
    for o in outcomes {
        let key = format!("setting.{}", o.setting_id);
        out.push_str(&format!("{key}.seed = {}\n", o.seed));
        out.push_str(&format!("{key}.status = {}\n", o.status.as_str()));
        if let SettingStatus::Failed(msg) = &o.status {
            out.push_str(&format!("{key}.error = {}\n", msg.replace('\n', " ")));
        }
        out.push_str(&format!("{key}.wall_time_s = {:.3}\n", o.wall_time_secs));
    }
    out
}

pub(crate) fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(|e| MfmError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| MfmError::io(path, e))
}
