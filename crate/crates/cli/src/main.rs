use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mfm_core::dataset::{load_dataset, BUILTIN_GALAXY};
use mfm_core::harness::{
    run_sweep, summary_rows_csv, validate_priors, B0Rule, MfmSetting, SettingStatus, SweepConfig, MARGINALS_FILE,
    SUMMARY_FILE,
};
use mfm_core::partition_prior::{induced_kplus_prior, prior_k_vector};
use mfm_core::prior_k::{DirichletSchedule, PriorOnK, ScheduleKind};
use mfm_core::sampler::{run_chain, ChainTrace, Likelihood, Protocol};
use mfm_core::summaries::{
    linspace, marginal_table, prior_4sigma_density_curve, prior_mean_density_curve, summarize_kplus,
    KPlusPosteriorSummary,
};
use mfm_core::{MfmError, Result};

#[derive(Parser)]
#[command(name = "mfm", version, about = "Mixture of finite mixtures with the telescoping sampler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one chain and print its K+ summary.
    Run(RunArgs),
    /// Run a factorial grid of settings.
    Sweep(SweepArgs),
    /// Exact priors on K and K+ as CSV.
    PriorKplus(PriorKplusArgs),
    /// Prior densities of the component means and of 4 sigma as CSV.
    PriorCurves(PriorCurvesArgs),
    /// Summaries and marginal averages from trace files.
    Summarize(SummarizeArgs),
    /// Flattened-likelihood chains compared against the exact K+ prior.
    ValidatePrior(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Data file, or builtin:galaxy.
    #[arg(long, default_value = BUILTIN_GALAXY)]
    data: String,
    /// Prior on K, e.g. trpois(3), bnb(1,4,3), geom(0.1), uniform(1,30).
    #[arg(long, default_value = "trpois(3)")]
    prior: PriorOnK,
    #[arg(long, default_value = "static")]
    kind: ScheduleKind,
    /// gamma (static) or alpha (dynamic).
    #[arg(long, default_value_t = 1.0)]
    value: f64,
    /// Variance B0 of the prior on the component means.
    #[arg(long = "B0", default_value_t = 20.0)]
    big_b0: f64,
    /// Rate C0 of the Gamma prior on the component precisions.
    #[arg(long = "C0", default_value_t = 5.0)]
    big_c0: f64,
    /// Shape c0 of the Gamma prior on the component precisions.
    #[arg(long, default_value_t = 2.0)]
    c0: f64,
    /// Prior location of the means: "midpoint" or a number.
    #[arg(long, default_value = "midpoint")]
    b0: B0Rule,
    /// Protocol preset: desk or full.
    #[arg(long, default_value = "desk")]
    preset: String,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thinning: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    init_components: Option<usize>,
    /// normal, or flattened to sample from the prior.
    #[arg(long, default_value = "normal")]
    likelihood: Likelihood,
    /// Write the trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set grid.B0=20 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PriorKplusArgs {
    /// Priors on K, comma separated; defaults to the four study priors.
    #[arg(long)]
    priors: Option<String>,
    /// Schedule kinds, comma separated.
    #[arg(long, default_value = "static,dynamic")]
    kinds: String,
    /// Dirichlet values, comma separated.
    #[arg(long, default_value = "0.01,1,10")]
    values: String,
    /// Sample size; defaults to the size of --data.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = BUILTIN_GALAXY)]
    data: String,
    /// Largest k reported.
    #[arg(long, default_value_t = 30)]
    k_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PriorCurvesArgs {
    /// Values of B0, comma separated.
    #[arg(long = "B0", default_value = "6.3,20,100,630")]
    big_b0: String,
    /// Values of C0, comma separated.
    #[arg(long = "C0", default_value = "0.5,1,5,12.5")]
    big_c0: String,
    #[arg(long, default_value_t = 2.0)]
    c0: f64,
    /// Prior location of the means: "midpoint" of --data or a number.
    #[arg(long, default_value = "midpoint")]
    b0: B0Rule,
    #[arg(long, default_value = BUILTIN_GALAXY)]
    data: String,
    /// Grid points per curve.
    #[arg(long, default_value_t = 261)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Trace CSV files or directories of them, named by setting id.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Output directory for summary.csv and marginals.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::PriorKplus(a) => cmd_prior_kplus(a),
        Command::PriorCurves(a) => cmd_prior_curves(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::ValidatePrior(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 is reserved for failed settings or flagged checks, 2 for usage errors.
fn exit_code(e: &MfmError) -> u8 {
    match e.category() {
        "data" => 3,
        "config" => 4,
        "numerical" => 5,
        "format" => 6,
        "io" => 7,
        _ => 1,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| MfmError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let data = load_dataset(&a.data)?;
    let mut setting = MfmSetting::new(a.prior, DirichletSchedule::new(a.kind, a.value)?, a.big_b0, a.big_c0)?;
    setting.precision_shape = a.c0;
    setting.b0_rule = a.b0;
    let mut protocol = Protocol::preset(&a.preset)?;
    protocol.seed = a.seed;
    if let Some(v) = a.iterations {
        protocol.iterations = v;
    }
    if let Some(v) = a.burn_in {
        protocol.burn_in = v;
    }
    if let Some(v) = a.thinning {
        protocol.thinning = v;
    }
    if let Some(v) = a.init_components {
        protocol.init_components = v;
    }
    let trace = run_chain(data.values(), &setting.model(&data)?, &protocol, a.likelihood)?;
    if let Some(path) = &a.trace {
        trace.write_csv(path)?;
    }
    let s = summarize_kplus(&trace)?;
    println!("setting_id = {}", setting.setting_id());
    println!("seed = {}", protocol.seed);
    println!("draws = {}", trace.len());
    println!("mode = {}", s.mode);
    println!("entropy = {}", s.entropy);
    println!("hist_json = {}", s.hist_json());
    Ok(ExitCode::SUCCESS)
}

fn sweep_config(a: &SweepArgs) -> Result<SweepConfig> {
    let mut cfg = match &a.config {
        Some(p) => SweepConfig::from_file(p)?,
        None => SweepConfig::default(),
    };
    let mut pairs = Vec::new();
    for o in &a.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| MfmError::Config(format!("--set expects KEY=VALUE, got {o:?}")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    cfg.apply(&pairs)?;
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    let cfg = sweep_config(&a)?;
    let report = run_sweep(&cfg)?;
    let reused = report
        .outcomes
        .iter()
        .filter(|o| o.status == SettingStatus::Reused)
        .count();
    let failed: Vec<_> = report.failures().collect();
    println!(
        "{} settings, {} reused, {} failed",
        report.outcomes.len(),
        reused,
        failed.len()
    );
    for f in &failed {
        if let SettingStatus::Failed(msg) = &f.status {
            eprintln!("failed {}: {msg}", f.setting_id);
        }
    }
    println!("summary: {}", report.summary_path.display());
    println!("manifest: {}", report.manifest_path.display());
    if let Some(p) = &report.marginals_path {
        println!("marginals: {}", p.display());
    }
    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn parse_list<T: std::str::FromStr<Err = MfmError>>(s: &str) -> Result<Vec<T>> {
    mfm_core::harness::split_list(s)?.iter().map(|x| x.parse()).collect()
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    mfm_core::harness::split_list(s)?
        .iter()
        .map(|x| {
            x.parse::<f64>()
                .map_err(|_| MfmError::Config(format!("bad number {x:?}")))
        })
        .collect()
}

fn cmd_prior_kplus(a: PriorKplusArgs) -> Result<ExitCode> {
    let priors: Vec<PriorOnK> = match &a.priors {
        Some(s) => parse_list(s)?,
        None => PriorOnK::study_priors().to_vec(),
    };
    let kinds: Vec<ScheduleKind> = parse_list(&a.kinds)?;
    let values = parse_numbers(&a.values)?;
    let n = match a.n {
        Some(n) if n >= 1 => n,
        Some(_) => return Err(MfmError::Config("n must be positive".into())),
        None => load_dataset(&a.data)?.len(),
    };
    let mut out = String::from("prior,kind,value,k,p_K,p_Kplus\n");
    for prior in &priors {
        let p_k = prior_k_vector(prior, a.k_max);
        for &kind in &kinds {
            for &v in &values {
                let schedule = DirichletSchedule::new(kind, v)?;
                let kplus = induced_kplus_prior(prior, &schedule, n);
                for k in 1..=a.k_max {
                    out.push_str(&format!(
                        "\"{prior}\",{kind},{v},{k},{},{}\n",
                        p_k[k - 1],
                        kplus.prob(k)
                    ));
                }
            }
        }
    }
    emit(a.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_prior_curves(a: PriorCurvesArgs) -> Result<ExitCode> {
    let b0 = match a.b0 {
        B0Rule::Explicit(v) => v,
        B0Rule::DataMidpoint => load_dataset(&a.data)?.summary_constants()?.midpoint,
    };
    let mut out = String::from("curve,parameter,x,density\n");
    let mean_grid = linspace(b0 - 30.0, b0 + 30.0, a.points);
    for big_b0 in parse_numbers(&a.big_b0)? {
        for (x, d) in prior_mean_density_curve(b0, big_b0, &mean_grid)? {
            out.push_str(&format!("mean,{big_b0},{x},{d}\n"));
        }
    }
    let sigma_grid = linspace(0.05, 25.0, a.points);
    for big_c0 in parse_numbers(&a.big_c0)? {
        for (t, d) in prior_4sigma_density_curve(a.c0, big_c0, &sigma_grid)? {
            out.push_str(&format!("four_sigma,{big_c0},{t},{d}\n"));
        }
    }
    emit(a.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn trace_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| MfmError::Io {
                path: p.clone(),
                source: e,
            })?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn cmd_summarize(a: SummarizeArgs) -> Result<ExitCode> {
    let files = trace_files(&a.traces)?;
    let mut rows: Vec<(MfmSetting, KPlusPosteriorSummary)> = Vec::new();
    for f in &files {
        let id = f
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| MfmError::Config(format!("cannot take a setting id from {}", f.display())))?;
        let setting = MfmSetting::from_id(id)?;
        rows.push((setting, summarize_kplus(&ChainTrace::read_csv(f)?)?));
    }
    fs::create_dir_all(&a.out).map_err(|e| MfmError::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let borrowed: Vec<(MfmSetting, &KPlusPosteriorSummary)> = rows.iter().map(|(s, k)| (*s, k)).collect();
    let summary_path = a.out.join(SUMMARY_FILE);
    emit(Some(&summary_path), &summary_rows_csv(&borrowed)?)?;
    println!("summary: {}", summary_path.display());
    let modes: Vec<(MfmSetting, usize)> = rows.iter().map(|(s, k)| (*s, k.mode)).collect();
    match marginal_table(&modes) {
        Ok(t) => {
            let p = a.out.join(MARGINALS_FILE);
            emit(Some(&p), &t.to_csv())?;
            println!("marginals: {}", p.display());
        }
        Err(e @ MfmError::IncompleteGrid(_)) => eprintln!("marginals skipped: {e}"),
        Err(e) => return Err(e),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(a: SweepArgs) -> Result<ExitCode> {
    let cfg = sweep_config(&a)?;
    let checks = validate_priors(&cfg)?;
    println!("setting_id,draws,tv,flagged");
    for c in &checks {
        println!("{},{},{},{}", c.setting_id, c.draws, c.tv, c.flagged);
        if let Some(e) = &c.error {
            eprintln!("failed {}: {e}", c.setting_id);
        }
    }
    Ok(if checks.iter().any(|c| c.flagged) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
