use std::fs;
use std::path::Path;

use mfm_core::harness::{
    check_prior_recovery, parse_kv, run_sweep, trace_path, validate_priors, MfmSetting, SettingStatus,
    SweepConfig, PRIOR_TV_THRESHOLD, SUMMARY_HEADER,
};
use mfm_core::partition_prior::induced_kplus_prior;
use mfm_core::prior_k::{DirichletSchedule, PriorOnK, ScheduleKind};
use mfm_core::{Dataset, Protocol};

fn small_config(dir: &Path) -> SweepConfig {
    SweepConfig {
        priors: vec![
            PriorOnK::zero_trunc_poisson(3.0).unwrap(),
            PriorOnK::shifted_geometric(0.1).unwrap(),
        ],
        kinds: vec![ScheduleKind::Dynamic],
        dirichlet_values: vec![1.0],
        mean_variances: vec![20.0],
        precision_rates: vec![5.0],
        protocol: Protocol {
            iterations: 1_000,
            burn_in: 200,
            thinning: 4,
            seed: 42,
            ..Protocol::desk()
        },
        output_dir: dir.to_path_buf(),
        ..SweepConfig::default()
    }
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn sweep_writes_traces_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let report = run_sweep(&cfg).unwrap();
    assert_eq!(report.outcomes.len(), 2);
    for o in &report.outcomes {
        assert_eq!(o.status, SettingStatus::Completed);
        let trace = read(&trace_path(dir.path(), &o.setting_id));
        assert_eq!(trace.lines().count(), 1 + 250);
    }
    let summary = read(&report.summary_path);
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], SUMMARY_HEADER.join(","));
    assert!(lines[1].starts_with("dynamic_a1_trpois(3)_B0-20_C0-5,dynamic,trpois(3),1,20,5,"));
    assert!(report.marginals_path.is_some());

    let manifest = parse_kv(&read(&report.manifest_path)).unwrap();
    let get = |k: &str| manifest.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
    assert_eq!(get("settings").as_deref(), Some("2"));
    assert_eq!(get("failed").as_deref(), Some("0"));
    let id = &report.outcomes[0].setting_id;
    assert_eq!(
        get(&format!("setting.{id}.seed")),
        Some(report.outcomes[0].seed.to_string())
    );
    // The configuration part of the manifest reads back to the same config.
    let config_pairs: Vec<(String, String)> = manifest
        .iter()
        .filter(|(k, _)| !k.starts_with("setting") && !["version", "failed", "wall_time_s"].contains(&k.as_str()))
        .cloned()
        .collect();
    assert_eq!(SweepConfig::from_pairs(&config_pairs).unwrap(), cfg);
}

#[test]
fn rerun_is_a_no_op_and_resume_fills_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let first = run_sweep(&cfg).unwrap();
    let summary = read(&first.summary_path);
    let ids: Vec<String> = first.outcomes.iter().map(|o| o.setting_id.clone()).collect();
    let traces: Vec<String> = ids.iter().map(|id| read(&trace_path(dir.path(), id))).collect();

    let second = run_sweep(&cfg).unwrap();
    assert!(second.outcomes.iter().all(|o| o.status == SettingStatus::Reused));
    assert_eq!(read(&second.summary_path), summary);

    fs::remove_file(trace_path(dir.path(), &ids[1])).unwrap();
    let third = run_sweep(&cfg).unwrap();
    assert_eq!(third.outcomes[0].status, SettingStatus::Reused);
    assert_eq!(third.outcomes[1].status, SettingStatus::Completed);
    assert_eq!(read(&trace_path(dir.path(), &ids[1])), traces[1]);
    assert_eq!(read(&third.summary_path), summary);
}

#[test]
fn worker_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut one = small_config(a.path());
    one.priors.push(PriorOnK::uniform(1, 30).unwrap());
    one.precision_rates = vec![0.5, 5.0];
    let mut three = one.clone();
    three.workers = 3;
    three.output_dir = b.path().to_path_buf();
    let ra = run_sweep(&one).unwrap();
    let rb = run_sweep(&three).unwrap();
    assert_eq!(read(&ra.summary_path), read(&rb.summary_path));
    for o in &ra.outcomes {
        assert_eq!(
            read(&trace_path(a.path(), &o.setting_id)),
            read(&trace_path(b.path(), &o.setting_id))
        );
    }
}

#[test]
fn failing_setting_is_recorded_without_stopping_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    // Ten initial components do not fit a prior supported on 1..5.
    cfg.priors.push(PriorOnK::uniform(1, 5).unwrap());
    let report = run_sweep(&cfg).unwrap();
    let failed: Vec<_> = report.failures().collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].setting_id.contains("uniform(1,5)"));
    assert_eq!(read(&report.summary_path).lines().count(), 3);
    assert!(report.marginals_path.is_none());
    let manifest = read(&report.manifest_path);
    assert!(manifest.contains(&format!("setting.{}.status = failed", failed[0].setting_id)));
    assert!(manifest.contains("failed = 1"));
}

#[test]
fn prior_gate_passes_matched_and_flags_mismatched_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SweepConfig {
        priors: vec![PriorOnK::uniform(1, 30).unwrap()],
        kinds: vec![ScheduleKind::Static],
        dirichlet_values: vec![1.0],
        mean_variances: vec![20.0],
        precision_rates: vec![5.0],
        protocol: Protocol {
            iterations: 200_000,
            burn_in: 2_000,
            thinning: 4,
            ..Protocol::desk()
        },
        output_dir: dir.path().to_path_buf(),
        ..SweepConfig::default()
    };
    let checks = validate_priors(&cfg).unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0].draws, 50_000);
    assert!(checks[0].tv < PRIOR_TV_THRESHOLD, "{}", checks[0].tv);
    assert!(!checks[0].flagged);

    let data = Dataset::galaxy();
    let sparse = MfmSetting::new(
        PriorOnK::uniform(1, 30).unwrap(),
        DirichletSchedule::Static { gamma: 0.01 },
        20.0,
        5.0,
    )
    .unwrap();
    let wrong = induced_kplus_prior(&sparse.prior_k, &DirichletSchedule::Static { gamma: 10.0 }, data.len());
    let protocol = Protocol {
        iterations: 40_000,
        burn_in: 1_000,
        thinning: 4,
        ..Protocol::desk()
    };
    let c = check_prior_recovery(&data, &sparse, &protocol, &wrong).unwrap();
    assert!(c.tv > 0.3, "{}", c.tv);
    assert!(c.flagged);
}
