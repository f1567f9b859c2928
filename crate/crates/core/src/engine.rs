//! The monthly simulation loop and batch orchestration.
//!
//! A run spends its first `observation_months` just watching arrivals, uses
//! them to calibrate the monthly capacity, then processes the pool (backlog
//! plus new arrivals) under the configured policy every month until the
//! horizon — optionally continuing with zero arrivals until the backlog
//! drains.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{validate_config, ConfigError, Policy, SimulationConfig};
use crate::feedback::FeedbackState;
use crate::genesis::{sample_monthly_batch, GenesisError};
use crate::metrics::{MonthlyMetrics, SourceMap};
use crate::policies::{select, CandidatePool, PolicyError};
use crate::report::{Report, RiskType};
use crate::rng::RngStream;

/// Drain mode gives up after this many extra horizons to guarantee
/// termination (e.g. a blocking-FIFO queue headed by a report larger than
/// the monthly capacity can never empty).
pub const DRAIN_HORIZON_FACTOR: u32 = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Genesis(#[from] GenesisError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("capacity calibration failed: {0}")]
    Calibration(String),
    #[error("invalid replay script: {0}")]
    Replay(String),
    #[error("batch needs at least one run")]
    EmptyBatch,
}

/// Monthly processing budget: the configured fraction of the average total
/// monthly supervision cost seen during observation.
pub fn calibrate_capacity(
    observation_batches: &[Vec<Report>],
    capacity_fraction: f64,
) -> Result<f64, EngineError> {
    if observation_batches.is_empty() {
        return Err(EngineError::Calibration("no observation months".into()));
    }
    if observation_batches.iter().all(|b| b.is_empty()) {
        return Err(EngineError::Calibration(
            "no reports observed; capacity would be zero".into(),
        ));
    }
    let total: f64 = observation_batches
        .iter()
        .flatten()
        .map(|r| r.supervision_cost)
        .sum();
    Ok(capacity_fraction * total / observation_batches.len() as f64)
}

/// Everything one run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub run_index: u64,
    /// The validated config the run executed (prior weights renormalized).
    pub config: SimulationConfig,
    /// Calibrated monthly capacity C_m.
    pub capacity: f64,
    /// One entry per simulated month, drain months included.
    pub metrics: Vec<MonthlyMetrics>,
    /// Every report that ever arrived, in id order; processed ones carry
    /// their processed_month.
    pub reports: Vec<Report>,
    /// Month-end feedback states, aligned with `metrics`; `None` when
    /// feedback is disabled.
    pub feedback: Option<Vec<FeedbackState>>,
    /// Extra months simulated past the horizon to drain the backlog.
    pub drain_months: u32,
    /// Drain mode hit [`DRAIN_HORIZON_FACTOR`] × duration without emptying
    /// the backlog.
    pub drain_cap_hit: bool,
}

impl SimulationResult {
    pub fn final_backlog(&self) -> u32 {
        self.metrics.last().map_or(0, |m| m.backlog_size)
    }

    pub fn processed_reports(&self) -> impl Iterator<Item = &Report> {
        self.reports.iter().filter(|r| r.processed_month.is_some())
    }
}

enum Arrivals {
    /// Sample from the profiles, one stream per source.
    Generated { streams: Vec<RngStream>, next_id: u64 },
    /// Replay a fixed script: `batches[m]` arrives in month `m`.
    Scripted { batches: Vec<Vec<Report>> },
}

/// Runs one simulation with generated arrivals. `drain` keeps processing
/// past the horizon (zero arrivals) until the backlog empties.
pub fn run_simulation(config: &SimulationConfig, drain: bool) -> Result<SimulationResult, EngineError> {
    let config = validate_config(config.clone())?;
    run_core(config, 0, drain, None)
}

/// Replays pre-built reports through the engine: `batches[m]` is the set
/// arriving in month `m`. Always drains, so every replayable report is
/// eventually processed.
pub fn run_replay(
    config: &SimulationConfig,
    batches: Vec<Vec<Report>>,
) -> Result<SimulationResult, EngineError> {
    let config = validate_config(config.clone())?;
    if batches.len() > config.duration_months as usize {
        return Err(EngineError::Replay(format!(
            "script spans {} months but the horizon is {}",
            batches.len(),
            config.duration_months
        )));
    }
    let mut seen = HashMap::new();
    for (month, batch) in batches.iter().enumerate() {
        for report in batch {
            if report.processed_month.is_some() {
                return Err(EngineError::Replay(format!(
                    "report {} is already processed",
                    report.id
                )));
            }
            if report.arrival_month != month as u32 {
                return Err(EngineError::Replay(format!(
                    "report {} has arrival_month {} but sits in batch {month}",
                    report.id, report.arrival_month
                )));
            }
            if seen.insert(report.id, month).is_some() {
                return Err(EngineError::Replay(format!("duplicate report id {}", report.id)));
            }
        }
    }
    run_core(config, 0, true, Some(batches))
}

fn run_core(
    config: SimulationConfig,
    run_index: u64,
    drain: bool,
    script: Option<Vec<Vec<Report>>>,
) -> Result<SimulationResult, EngineError> {
    // Canonical source order, independent of how the config listed profiles.
    let mut base_profiles = config.profiles.clone();
    base_profiles.sort_by_key(|p| p.source);

    let mut arrivals_source = match script {
        Some(batches) => Arrivals::Scripted { batches },
        None => Arrivals::Generated {
            streams: base_profiles
                .iter()
                .map(|p| RngStream::new(config.master_seed, run_index, &format!("gen/{}", p.source)))
                .collect(),
            next_id: 0,
        },
    };
    let mut policy_rng = RngStream::new(
        config.master_seed,
        run_index,
        &format!("policy/{}", config.policy),
    );

    let mut reports: Vec<Report> = Vec::new();
    let mut index_of: HashMap<u64, usize> = HashMap::new();
    let mut backlog: Vec<usize> = Vec::new();
    let mut observation_batches: Vec<Vec<Report>> = Vec::new();
    let mut metrics: Vec<MonthlyMetrics> = Vec::new();
    let mut feedback_state = config
        .feedback
        .as_ref()
        .map(|cfg| FeedbackState::initialize(cfg, &base_profiles));
    let mut feedback_series: Vec<FeedbackState> = Vec::new();
    let mut capacity: Option<f64> = None;

    let horizon = config.duration_months;
    let drain_cap = horizon * DRAIN_HORIZON_FACTOR;
    let mut drain_months = 0u32;
    let mut month = 0u32;

    loop {
        let draining = month >= horizon;
        if draining && (!drain || backlog.is_empty() || drain_months >= drain_cap) {
            break;
        }
        if draining {
            drain_months += 1;
        }

        // ── Arrivals ────────────────────────────────────────────────
        let mut arrivals = SourceMap::<u32>::default();
        let batch: Vec<Report> = if draining {
            Vec::new()
        } else {
            match &mut arrivals_source {
                Arrivals::Generated { streams, next_id } => {
                    let effective = feedback_state
                        .as_ref()
                        .map(|s| s.effective_profiles(&base_profiles));
                    let profiles = effective.as_deref().unwrap_or(&base_profiles);
                    let mut batch = Vec::new();
                    for (profile, stream) in profiles.iter().zip(streams.iter_mut()) {
                        batch.extend(sample_monthly_batch(profile, month, next_id, stream)?);
                    }
                    batch
                }
                Arrivals::Scripted { batches } => batches
                    .get_mut(month as usize)
                    .map(std::mem::take)
                    .unwrap_or_default(),
            }
        };
        for report in batch {
            arrivals[report.source] += 1;
            index_of.insert(report.id, reports.len());
            backlog.push(reports.len());
            reports.push(report);
        }

        // ── Observation or processing ───────────────────────────────
        if month < config.observation_months {
            let start = reports.len() - arrivals.iter().map(|(_, &n)| n as usize).sum::<usize>();
            observation_batches.push(reports[start..].to_vec());
            metrics.push(MonthlyMetrics::compute(
                month,
                arrivals,
                &[],
                backlog.len() as u32,
                None,
            ));
        } else {
            let cap = match capacity {
                Some(c) => c,
                None => {
                    let c = calibrate_capacity(&observation_batches, config.capacity_fraction)?;
                    capacity = Some(c);
                    c
                }
            };
            let pool = CandidatePool::new(backlog.iter().map(|&i| &reports[i]))?;
            let selection = select(config.policy, &pool, cap, config.fifo_skip_mode, &mut policy_rng);
            drop(pool);
            for id in &selection.ids {
                reports[index_of[id]].processed_month = Some(month);
            }
            backlog.retain(|&i| reports[i].processed_month.is_none());
            let processed: Vec<&Report> =
                selection.ids.iter().map(|id| &reports[index_of[id]]).collect();
            let month_metrics = MonthlyMetrics::compute(
                month,
                arrivals,
                &processed,
                backlog.len() as u32,
                Some(cap),
            );
            if let (Some(state), Some(cfg)) = (&mut feedback_state, &config.feedback) {
                state.advance(&month_metrics, cfg);
            }
            metrics.push(month_metrics);
        }
        if let Some(state) = &feedback_state {
            feedback_series.push(state.clone());
        }

        month += 1;
    }

    let drain_cap_hit = drain && !backlog.is_empty();
    // Canonical order; generated ids are already sequential, but replay
    // scripts may interleave ids across months.
    reports.sort_by_key(|r| r.id);
    Ok(SimulationResult {
        run_index,
        capacity: capacity.expect("at least one processing month"),
        metrics,
        reports,
        feedback: feedback_state.map(|_| feedback_series),
        drain_months,
        drain_cap_hit,
        config,
    })
}

/// Cross-run aggregates over a batch: means pool every processed report
/// from every run, so longer-backlog runs weigh in proportionally.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub n_runs: u32,
    pub policy: Policy,
    pub total_generated: u64,
    pub total_processed: u64,
    pub mean_cost: Option<f64>,
    pub mean_accessibility: Option<f64>,
    pub mean_damage: Option<f64>,
    pub mean_priority: Option<f64>,
    /// Fraction of processed reports per source (zeros when nothing was
    /// processed).
    pub source_shares: SourceMap<f64>,
    /// Fraction of processed reports per risk type.
    pub risk_type_shares: BTreeMap<RiskType, f64>,
    /// Backlog size averaged over the runs that reached each month.
    pub mean_backlog_by_month: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    /// Per-run results, ordered by run index.
    pub runs: Vec<SimulationResult>,
    pub summary: BatchSummary,
}

/// Runs `n_runs` independent replicas of `config` (run indices 0..n_runs)
/// in parallel and aggregates them. Results are identical for any thread
/// count: each run's streams depend only on (master_seed, run_index).
pub fn run_batch(
    config: &SimulationConfig,
    n_runs: u32,
    drain: bool,
) -> Result<BatchResult, EngineError> {
    if n_runs == 0 {
        return Err(EngineError::EmptyBatch);
    }
    let config = validate_config(config.clone())?;
    let runs: Vec<SimulationResult> = (0..n_runs)
        .into_par_iter()
        .map(|i| run_core(config.clone(), u64::from(i), drain, None))
        .collect::<Result<_, _>>()?;
    let summary = summarize(&config, &runs);
    Ok(BatchResult { runs, summary })
}

fn summarize(config: &SimulationConfig, runs: &[SimulationResult]) -> BatchSummary {
    let mut total_generated = 0u64;
    let mut total_processed = 0u64;
    let (mut cost, mut acc, mut dmg, mut pri) = (0.0, 0.0, 0.0, 0.0);
    let mut by_source = SourceMap::<u64>::default();
    let mut by_type: BTreeMap<RiskType, u64> = BTreeMap::new();
    let mut backlog_sums: Vec<(f64, u32)> = Vec::new();

    for run in runs {
        total_generated += run.reports.len() as u64;
        for r in run.processed_reports() {
            total_processed += 1;
            cost += r.supervision_cost;
            acc += r.accessibility;
            dmg += r.potential_damage;
            pri += r.priority;
            by_source[r.source] += 1;
            *by_type.entry(r.risk_type.clone()).or_insert(0) += 1;
        }
        for (i, m) in run.metrics.iter().enumerate() {
            if i == backlog_sums.len() {
                backlog_sums.push((0.0, 0));
            }
            backlog_sums[i].0 += f64::from(m.backlog_size);
            backlog_sums[i].1 += 1;
        }
    }

    let n = total_processed as f64;
    let mean = |total: f64| (total_processed > 0).then(|| total / n);
    let share = |count: u64| if total_processed > 0 { count as f64 / n } else { 0.0 };
    BatchSummary {
        n_runs: runs.len() as u32,
        policy: config.policy,
        total_generated,
        total_processed,
        mean_cost: mean(cost),
        mean_accessibility: mean(acc),
        mean_damage: mean(dmg),
        mean_priority: mean(pri),
        source_shares: by_source.map(|_, &c| share(c)),
        risk_type_shares: by_type.iter().map(|(t, &c)| (t.clone(), share(c))).collect(),
        mean_backlog_by_month: backlog_sums
            .iter()
            .map(|&(sum, count)| sum / f64::from(count))
            .collect(),
    }
}
