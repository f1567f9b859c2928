//! `supervisim` — command-line front end for the supervision simulator.
//!
//! Four subcommands: `simulate` (one run), `batch` (seeded replicas,
//! optionally across every policy), `replay` (a scored conversation corpus)
//! and `forecast` (trend projection of an incident series). All outputs are
//! plain CSV/JSON files plus a checksummed manifest; a fixed `--seed` and
//! `--stamp` make every byte reproducible.

mod emit;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::Utc;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use supervisim_core::forecast::{fit_holt, IncidentSeries, project_scenarios, ScenarioMultipliers};
use supervisim_core::ingest::{parse_records, replay, IngestError, MappingConfig, RecordSchema};
use supervisim_core::{
    run_batch, run_simulation, DistributionPreset, EngineError, FeedbackConfig, Policy,
    SimulationConfig, SimulationResult, SourceProfile,
};

use emit::Emitter;

// ── Errors and exit codes ────────────────────────────────────────────────

/// 1 = the request itself is invalid; 2 = the environment failed us.
#[derive(Debug, Error)]
pub(crate) enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match &e {
            IngestError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<supervisim_core::forecast::ForecastError> for CliError {
    fn from(e: supervisim_core::forecast::ForecastError) -> Self {
        CliError::Validation(e.to_string())
    }
}

// ── Command line ─────────────────────────────────────────────────────────

#[derive(Parser)]
#[command(
    name = "supervisim",
    version,
    about = "Seedable simulator of risk-report supervision policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write report, monthly and summary files.
    Simulate(SimulateArgs),
    /// Run seeded replicas, one report file per run, plus a batch summary.
    Batch(BatchArgs),
    /// Replay a scored conversation corpus through the engine.
    Replay(ReplayArgs),
    /// Fit a linear trend to a monthly series and project scenarios.
    Forecast(ForecastArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON configuration file (same field names as the library config).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; defaults to $SUPERVISIM_OUT, then ./out.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replace the configured source profiles with a named preset.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Enable the incentive/occurrence feedback loop with default
    /// constants (a config file with its own feedback section wins).
    #[arg(long)]
    feedback: bool,
    /// Pin the timestamp used in file names (default: current UTC time,
    /// YYYYMMDD_HHMMSS).
    #[arg(long)]
    stamp: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Selection policy; overrides the config file.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Keep processing with zero arrivals until the backlog empties.
    #[arg(long)]
    drain: bool,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of seeded replicas (run indices 0..N).
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
    /// Policy to batch, or `all` for one batch per policy.
    #[arg(long, value_enum)]
    policy: Option<BatchPolicyArg>,
    /// Drain every run's backlog past the horizon.
    #[arg(long)]
    drain: bool,
    /// Thread budget for parallel runs (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(usize))]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Corpus file: CSV with a header row, or JSON-lines.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// JSON column-name overrides for the corpus.
    #[arg(long, value_name = "PATH")]
    schema: Option<PathBuf>,
    /// JSON mapping constants (thresholds and scale factors).
    #[arg(long, value_name = "PATH")]
    mapping: Option<PathBuf>,
    /// Selection policy; overrides the config file.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
}

#[derive(Args)]
struct ForecastArgs {
    /// Series file: CSV with header `month,count`; months are integers or
    /// YYYY-MM labels.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Output directory; defaults to $SUPERVISIM_OUT, then ./out.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Level smoothing, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Trend smoothing, in [0, 1].
    #[arg(long, default_value_t = 0.3)]
    beta: f64,
    /// Months to project past the end of the series.
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..))]
    horizon: u32,
    /// Trend multipliers as `worst,average,best` (default 2.0,1.0,-0.5).
    #[arg(long, value_name = "W,A,B", allow_hyphen_values = true)]
    multipliers: Option<String>,
    /// Pin the timestamp used in file names.
    #[arg(long)]
    stamp: Option<String>,
}

#[derive(Copy, Clone, ValueEnum)]
enum PolicyArg {
    /// First come, first served.
    #[value(alias = "non_prioritised", alias = "fifo")]
    NonPrioritised,
    Random,
    Priority,
    Diversity,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::NonPrioritised => Policy::NonPrioritised,
            PolicyArg::Random => Policy::Random,
            PolicyArg::Priority => Policy::Priority,
            PolicyArg::Diversity => Policy::Diversity,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum BatchPolicyArg {
    #[value(alias = "non_prioritised", alias = "fifo")]
    NonPrioritised,
    Random,
    Priority,
    Diversity,
    /// One batch per policy.
    All,
}

#[derive(Copy, Clone, ValueEnum)]
enum PresetArg {
    Standard,
    Fitted,
}

impl From<PresetArg> for DistributionPreset {
    fn from(p: PresetArg) -> DistributionPreset {
        match p {
            PresetArg::Standard => DistributionPreset::Standard,
            PresetArg::Fitted => DistributionPreset::Fitted,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Forecast(args) => cmd_forecast(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

// ── Shared plumbing ──────────────────────────────────────────────────────

fn resolve_out(arg: Option<PathBuf>) -> PathBuf {
    arg.or_else(|| std::env::var_os("SUPERVISIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn resolve_stamp(arg: &Option<String>) -> Result<String, CliError> {
    match arg {
        Some(s) if s.is_empty() || s.contains(['/', '\\']) => Err(CliError::Validation(
            format!("invalid --stamp {s:?}: must be a non-empty file-name fragment"),
        )),
        Some(s) => Ok(s.clone()),
        None => Ok(Utc::now().format("%Y%m%d_%H%M%S").to_string()),
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{} is not a valid {what}: {e}", path.display())))
}

fn load_config(common: &CommonArgs) -> Result<SimulationConfig, CliError> {
    let mut config: SimulationConfig = match &common.config {
        Some(path) => load_json(path, "configuration")?,
        None => SimulationConfig::default(),
    };
    if let Some(preset) = common.preset {
        config.profiles = SourceProfile::defaults(preset.into());
    }
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if common.feedback && config.feedback.is_none() {
        config.feedback = Some(FeedbackConfig::default());
    }
    Ok(config)
}

/// Report CSV, monthly CSV and JSON summary for one finished run.
fn emit_run_files(
    emitter: &mut Emitter,
    command: &str,
    result: &SimulationResult,
    stamp: &str,
) -> Result<(), CliError> {
    let tag = result.config.policy.file_tag();
    let xx = format!("{:02}", result.run_index);
    emitter.write(&format!("{tag}_simulation.{xx}_{stamp}.csv"), &emit::report_csv(result)?)?;
    emitter.write(&format!("{tag}_monthly.{xx}_{stamp}.csv"), &emit::monthly_csv(result)?)?;
    emitter.write(
        &format!("{tag}_summary.{xx}_{stamp}.json"),
        &emit::run_summary_json(command, result),
    )?;
    Ok(())
}

// ── Subcommands ──────────────────────────────────────────────────────────

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut config = load_config(&args.common)?;
    if let Some(policy) = args.policy {
        config.policy = policy.into();
    }
    let result = run_simulation(&config, args.drain)?;
    let stamp = resolve_stamp(&args.common.stamp)?;
    let out = resolve_out(args.common.out.clone());
    let mut emitter = Emitter::new(&out)?;
    emit_run_files(&mut emitter, "simulate", &result, &stamp)?;
    let files = emitter.finish(
        "simulate",
        args.common.config.as_deref(),
        Some(config.master_seed),
        &stamp,
    )?;
    if result.drain_cap_hit {
        eprintln!(
            "warning: drain stopped after {} extra months with {} reports too costly to ever fit",
            result.drain_months,
            result.final_backlog()
        );
    }
    println!(
        "simulate ({}): {} generated, {} processed, {files} files in {}",
        config.policy,
        result.reports.len(),
        result.processed_reports().count(),
        out.display()
    );
    Ok(())
}

fn cmd_batch(args: BatchArgs) -> Result<(), CliError> {
    let base = load_config(&args.common)?;
    let policies: Vec<Policy> = match args.policy {
        Some(BatchPolicyArg::All) => Policy::ALL.to_vec(),
        Some(BatchPolicyArg::NonPrioritised) => vec![Policy::NonPrioritised],
        Some(BatchPolicyArg::Random) => vec![Policy::Random],
        Some(BatchPolicyArg::Priority) => vec![Policy::Priority],
        Some(BatchPolicyArg::Diversity) => vec![Policy::Diversity],
        None => vec![base.policy],
    };
    let pool = match args.jobs {
        Some(0) => return Err(CliError::Validation("--jobs must be at least 1".into())),
        Some(jobs) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Validation(format!("cannot use {jobs} jobs: {e}")))?,
        ),
        None => None,
    };
    let stamp = resolve_stamp(&args.common.stamp)?;
    let out = resolve_out(args.common.out.clone());
    let mut emitter = Emitter::new(&out)?;
    let mut summaries = Vec::new();
    for policy in policies {
        let config = SimulationConfig { policy, ..base.clone() };
        let run = || run_batch(&config, args.runs, args.drain);
        let batch = match &pool {
            Some(p) => p.install(run),
            None => run(),
        }?;
        for result in &batch.runs {
            let name = format!(
                "{}_simulation.{:02}_{stamp}.csv",
                policy.file_tag(),
                result.run_index
            );
            emitter.write(&name, &emit::report_csv(result)?)?;
        }
        summaries.push(batch.summary);
    }
    emitter.write(
        &format!("batch_summary_{stamp}.json"),
        &emit::batch_summary_json(base.master_seed, args.runs, args.drain, &summaries),
    )?;
    let files = emitter.finish(
        "batch",
        args.common.config.as_deref(),
        Some(base.master_seed),
        &stamp,
    )?;
    println!(
        "batch: {} policies x {} runs, {files} files in {}",
        summaries.len(),
        args.runs,
        out.display()
    );
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<(), CliError> {
    let mut config = load_config(&args.common)?;
    if let Some(policy) = args.policy {
        config.policy = policy.into();
    }
    let schema: RecordSchema = match &args.schema {
        Some(path) => load_json(path, "record schema")?,
        None => RecordSchema::default(),
    };
    let mapping: MappingConfig = match &args.mapping {
        Some(path) => load_json(path, "mapping configuration")?,
        None => MappingConfig::default(),
    };
    let file = std::fs::File::open(&args.input)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.input.display())))?;
    let records = parse_records(std::io::BufReader::new(file), &schema)?;
    let result = replay(&records, &mapping, &config)?;
    let stamp = resolve_stamp(&args.common.stamp)?;
    let out = resolve_out(args.common.out.clone());
    let mut emitter = Emitter::new(&out)?;
    emit_run_files(&mut emitter, "replay", &result, &stamp)?;
    let files = emitter.finish(
        "replay",
        args.common.config.as_deref(),
        Some(config.master_seed),
        &stamp,
    )?;
    if result.drain_cap_hit {
        eprintln!(
            "warning: drain stopped at {} months with {} reports too costly to ever fit",
            result.metrics.len(),
            result.final_backlog()
        );
    }
    println!(
        "replay ({}): {} records, {} processed over {} months, {files} files in {}",
        config.policy,
        result.reports.len(),
        result.processed_reports().count(),
        result.metrics.len(),
        out.display()
    );
    Ok(())
}

fn cmd_forecast(args: ForecastArgs) -> Result<(), CliError> {
    let multipliers = parse_multipliers(args.multipliers.as_deref())?;
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.input.display())))?;
    let (series, labelled) = parse_series(&text, &args.input)?;
    let model = fit_holt(&series, args.alpha, args.beta)?;
    let projection = project_scenarios(&model, args.horizon, multipliers);
    let rows: Vec<(String, f64, f64, f64)> = projection
        .months
        .iter()
        .zip(&projection.worst)
        .zip(&projection.average)
        .zip(&projection.best)
        .map(|(((&m, &w), &a), &b)| {
            let month = if labelled { month_label(m) } else { m.to_string() };
            (month, w, a, b)
        })
        .collect();
    let stamp = resolve_stamp(&args.stamp)?;
    let out = resolve_out(args.out.clone());
    let mut emitter = Emitter::new(&out)?;
    emitter.write(&format!("forecast_{stamp}.csv"), &emit::forecast_csv(&rows)?)?;
    let rmse = (model.one_step_errors.iter().map(|e| e * e).sum::<f64>()
        / model.one_step_errors.len() as f64)
        .sqrt();
    let model_json = serde_json::json!({
        "command": "forecast",
        "alpha": args.alpha,
        "beta": args.beta,
        "horizon": args.horizon,
        "trend_multipliers": {
            "worst": multipliers.worst,
            "average": multipliers.average,
            "best": multipliers.best,
        },
        "level": emit::round_sig(model.level),
        "trend": emit::round_sig(model.trend),
        "rmse": emit::round_sig(rmse),
        "series_months": series.len(),
        "last_observed_month": if labelled {
            serde_json::json!(month_label(model.last_month))
        } else {
            serde_json::json!(model.last_month)
        },
    });
    let mut bytes = serde_json::to_vec_pretty(&model_json).expect("in-memory JSON serializes");
    bytes.push(b'\n');
    emitter.write(&format!("forecast_model_{stamp}.json"), &bytes)?;
    let files = emitter.finish("forecast", None, None, &stamp)?;
    println!(
        "forecast: {} observed months, horizon {}, {files} files in {}",
        series.len(),
        args.horizon,
        out.display()
    );
    Ok(())
}

// ── Forecast input parsing ───────────────────────────────────────────────

fn parse_multipliers(arg: Option<&str>) -> Result<ScenarioMultipliers, CliError> {
    let Some(s) = arg else {
        return Ok(ScenarioMultipliers::default());
    };
    let parts: Vec<&str> = s.split(',').collect();
    let [worst, average, best] = parts.as_slice() else {
        return Err(CliError::Validation(format!(
            "invalid --multipliers {s:?}: expected three comma-separated numbers"
        )));
    };
    let parse = |part: &str| {
        part.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
            CliError::Validation(format!("invalid --multipliers {s:?}: {part:?} is not a number"))
        })
    };
    Ok(ScenarioMultipliers {
        worst: parse(worst)?,
        average: parse(average)?,
        best: parse(best)?,
    })
}

/// Linear month index of a `YYYY-MM` label.
fn parse_month_label(s: &str) -> Option<i64> {
    let (year, month) = s.split_once('-')?;
    let year: i64 = year.parse().ok()?;
    let month: i64 = month.parse().ok()?;
    (1..=12).contains(&month).then_some(year * 12 + month - 1)
}

fn month_label(index: i64) -> String {
    format!("{:04}-{:02}", index.div_euclid(12), index.rem_euclid(12) + 1)
}

/// Reads a `month,count` series; months must be all integers or all
/// YYYY-MM labels. Returns the series and whether labels were used.
fn parse_series(text: &str, path: &Path) -> Result<(IncidentSeries, bool), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Validation(format!("{} has no `{name}` column", path.display()))
        })
    };
    let (month_col, count_col) = (col("month")?, col("count")?);
    let mut labelled: Option<bool> = None;
    let mut points = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |idx: usize| {
            row.get(idx).ok_or_else(|| {
                CliError::Validation(format!("{} line {line}: short row", path.display()))
            })
        };
        let raw_month = cell(month_col)?;
        let (month, is_label) = match raw_month.parse::<i64>() {
            Ok(v) => (v, false),
            Err(_) => match parse_month_label(raw_month) {
                Some(v) => (v, true),
                None => {
                    return Err(CliError::Validation(format!(
                        "{} line {line}: month {raw_month:?} is neither an integer nor YYYY-MM",
                        path.display()
                    )))
                }
            },
        };
        if *labelled.get_or_insert(is_label) != is_label {
            return Err(CliError::Validation(format!(
                "{} line {line}: mixed month formats",
                path.display()
            )));
        }
        let count: f64 = cell(count_col)?.parse().map_err(|_| {
            CliError::Validation(format!(
                "{} line {line}: count {:?} is not a number",
                path.display(),
                cell(count_col).unwrap_or_default()
            ))
        })?;
        points.push((month, count));
    }
    let series = IncidentSeries::new(points).map_err(|e| {
        CliError::Validation(format!("{}: {e}", path.display()))
    })?;
    Ok((series, labelled.unwrap_or(false)))
}
