//! Release gates: nine end-to-end guarantees covering policy separation,
//! generator statistics, feedback dynamics, corpus replay, artifact
//! reproducibility, and forecasting. Each test prints a single
//! `criterion N (...): PASS|FAIL` line with the measured values, and fails
//! the build when its gate does not hold.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::LazyLock;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::Rng;
use supervisim_core::feedback::update_incentive;
use supervisim_core::forecast::{fit_holt, project_scenarios, IncidentSeries, ScenarioMultipliers};
use supervisim_core::genesis::{sample_monthly_arrivals, sample_report};
use supervisim_core::ingest::{map_record, replay, MappingConfig, ReplayRecord};
use supervisim_core::policies::{knapsack_oracle, select_priority, CandidatePool, Selection};
use supervisim_core::{
    run_batch, BatchSummary, DamageModel, DistributionPreset, FeedbackConfig, Policy, Report,
    RiskType, RngStream, SimulationConfig, Source, SourceProfile,
};

// ── Gate bookkeeping ─────────────────────────────────────────────────────

/// Collects named checks for one gate and prints a single verdict line.
struct Gate {
    number: u32,
    name: &'static str,
    checks: usize,
    failures: Vec<String>,
}

impl Gate {
    fn new(number: u32, name: &'static str) -> Self {
        Gate {
            number,
            name,
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, label: &str, pass: bool, measured: String) {
        self.checks += 1;
        if !pass {
            self.failures.push(format!("{label} [{measured}]"));
        }
    }

    /// Relative band around an expected central value.
    fn band(&mut self, label: &str, value: f64, center: f64, rel_tol: f64) {
        let lo = center * (1.0 - rel_tol);
        let hi = center * (1.0 + rel_tol);
        self.check(
            label,
            (lo..=hi).contains(&value),
            format!("{value:.4} outside [{lo:.4}, {hi:.4}]"),
        );
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!(
                "criterion {} ({}): PASS — {} checks",
                self.number, self.name, self.checks
            );
        } else {
            let detail = self.failures.join("; ");
            println!("criterion {} ({}): FAIL — {detail}", self.number, self.name);
            panic!("criterion {} ({}): {detail}", self.number, self.name);
        }
    }
}

// ── Shared default batch (criteria 1–3) ──────────────────────────────────

const BATCH_RUNS: u32 = 100;
const BATCH_SEED: u64 = 42;

/// One 100-run batch per policy under the default configuration, computed
/// once; the wall time of the full computation is kept for criterion 1.
static DEFAULT_BATCHES: LazyLock<(Duration, Vec<BatchSummary>)> = LazyLock::new(|| {
    let start = Instant::now();
    let summaries = Policy::ALL
        .iter()
        .map(|&policy| {
            let config = SimulationConfig {
                policy,
                master_seed: BATCH_SEED,
                ..SimulationConfig::default()
            };
            run_batch(&config, BATCH_RUNS, false)
                .expect("default batch")
                .summary
        })
        .collect();
    (start.elapsed(), summaries)
});

fn batch(policy: Policy) -> &'static BatchSummary {
    let index = Policy::ALL
        .iter()
        .position(|&p| p == policy)
        .expect("known policy");
    &DEFAULT_BATCHES.1[index]
}

// ── Criterion 1: policy separation under defaults ────────────────────────

#[test]
fn criterion_1_policy_separation() {
    let mut gate = Gate::new(1, "policy separation under defaults");
    let elapsed = DEFAULT_BATCHES.0;
    let np = batch(Policy::NonPrioritised);
    let rd = batch(Policy::Random);
    let pb = batch(Policy::Priority);
    let dp = batch(Policy::Diversity);

    gate.check(
        "four 100-run batches under 60 s",
        elapsed < Duration::from_secs(60),
        format!("{elapsed:.2?}"),
    );

    let cost = |s: &BatchSummary| s.mean_cost.expect("processed reports");
    let pri = |s: &BatchSummary| s.mean_priority.expect("processed reports");
    let dmg = |s: &BatchSummary| s.mean_damage.expect("processed reports");
    let acc = |s: &BatchSummary| s.mean_accessibility.expect("processed reports");

    gate.band("priority-based mean cost", cost(pb), 11.18, 0.15);
    gate.band("non-prioritised mean cost", cost(np), 8.60, 0.12);
    gate.band("random mean cost", cost(rd), 8.17, 0.12);
    gate.band("priority-based mean priority", pri(pb), 4.81, 0.12);
    gate.band("non-prioritised mean priority", pri(np), 3.25, 0.10);
    gate.band("random mean priority", pri(rd), 3.22, 0.10);
    gate.band("priority-based mean damage", dmg(pb), 558.78, 0.40);
    gate.band("non-prioritised mean damage", dmg(np), 181.48, 0.30);
    gate.band("random mean damage", dmg(rd), 205.43, 0.30);

    // Diversity is held to orderings only: triage-like priority, damage
    // between the blind policies and pure triage.
    gate.check(
        "diversity priority above non-prioritised",
        pri(dp) > pri(np),
        format!("{:.4} vs {:.4}", pri(dp), pri(np)),
    );
    gate.check(
        "diversity priority above random",
        pri(dp) > pri(rd),
        format!("{:.4} vs {:.4}", pri(dp), pri(rd)),
    );
    gate.check(
        "diversity priority at most priority-based",
        pri(dp) <= pri(pb),
        format!("{:.4} vs {:.4}", pri(dp), pri(pb)),
    );
    let dmg_lo = dmg(rd).min(dmg(pb));
    let dmg_hi = dmg(rd).max(dmg(pb));
    gate.check(
        "diversity damage between random and priority-based",
        (dmg_lo..=dmg_hi).contains(&dmg(dp)),
        format!("{:.2} outside [{:.2}, {:.2}]", dmg(dp), dmg_lo, dmg_hi),
    );

    gate.check(
        "random accessibility above priority-based",
        acc(rd) > acc(pb),
        format!("{:.4} vs {:.4}", acc(rd), acc(pb)),
    );
    for (label, value) in [("random", acc(rd)), ("priority-based", acc(pb))] {
        gate.check(
            &format!("{label} accessibility within [0.55, 0.65]"),
            (0.55..=0.65).contains(&value),
            format!("{value:.4}"),
        );
    }

    gate.finish();
}

// ── Criterion 2: expert share under prioritisation ───────────────────────

#[test]
fn criterion_2_expert_share() {
    let mut gate = Gate::new(2, "expert share under prioritisation");
    let pb = batch(Policy::Priority).source_shares[Source::Expert];
    let np = batch(Policy::NonPrioritised).source_shares[Source::Expert];
    gate.check(
        "priority-based processes a strictly larger expert share",
        pb > np,
        format!("{pb:.4} vs {np:.4}"),
    );
    gate.finish();
}

// ── Criterion 3: backlog growth without prioritisation ───────────────────

#[test]
fn criterion_3_backlog_growth() {
    let mut gate = Gate::new(3, "backlog growth without prioritisation");
    let backlog = &batch(Policy::NonPrioritised).mean_backlog_by_month;
    let early = backlog[3]; // month 4
    let late = backlog[14]; // month 15
    gate.check(
        "mean backlog at month 15 above month 4",
        late > early,
        format!("{late:.2} vs {early:.2}"),
    );
    gate.finish();
}

// ── Criterion 4: greedy selection against the exact oracle ───────────────

fn selection_value(reports: &[Report], selection: &Selection) -> f64 {
    let chosen: BTreeSet<u64> = selection.ids.iter().copied().collect();
    reports
        .iter()
        .filter(|r| chosen.contains(&r.id))
        .map(|r| r.priority)
        .sum()
}

#[test]
fn criterion_4_greedy_against_oracle() {
    let mut gate = Gate::new(4, "greedy selection against the exact oracle");
    let profiles = SourceProfile::defaults(DistributionPreset::Standard);

    let mut ratios = Vec::with_capacity(200);
    let mut infeasible = 0usize;
    let mut non_maximal = 0usize;
    let mut above_oracle = 0usize;
    for instance in 0..200u64 {
        let mut rng = RngStream::new(4242, instance, "acceptance/oracle");
        let n = 5 + (instance as usize % 11); // pool sizes 5..=15
        let profile = &profiles[instance as usize % profiles.len()];
        let reports: Vec<Report> = (0..n)
            .map(|i| sample_report(profile, 0, i as u64, &mut rng).expect("sample"))
            .collect();
        let capacity = 0.5 * reports.iter().map(|r| r.supervision_cost).sum::<f64>();

        let pool = CandidatePool::new(&reports).expect("pool");
        let greedy = select_priority(&pool, capacity);
        let oracle = knapsack_oracle(&pool, capacity).expect("pool within oracle bound");

        if greedy.total_cost > capacity * (1.0 + 1e-12) {
            infeasible += 1;
        }
        let residual = capacity - greedy.total_cost;
        let chosen: BTreeSet<u64> = greedy.ids.iter().copied().collect();
        if reports
            .iter()
            .any(|r| !chosen.contains(&r.id) && r.supervision_cost <= residual - 1e-9)
        {
            non_maximal += 1;
        }

        let greedy_value = selection_value(&reports, &greedy);
        let oracle_value = selection_value(&reports, &oracle);
        if greedy_value > oracle_value * (1.0 + 1e-12) {
            above_oracle += 1;
        }
        ratios.push(greedy_value / oracle_value);
    }
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;

    gate.check(
        "greedy always within capacity",
        infeasible == 0,
        format!("{infeasible} of 200 instances"),
    );
    gate.check(
        "greedy leaves no fitting report behind",
        non_maximal == 0,
        format!("{non_maximal} of 200 instances"),
    );
    gate.check(
        "greedy never exceeds the oracle",
        above_oracle == 0,
        format!("{above_oracle} of 200 instances"),
    );
    gate.check(
        "mean greedy/oracle ratio at least 0.90",
        mean_ratio >= 0.90,
        format!("{mean_ratio:.4}"),
    );

    // Adversarial pool where greedy provably lands at 10/18: one heavy
    // high-priority report crowds out two lighter ones that together win.
    let security = RiskType::new("Security");
    let make = |id: u64, cost: f64, priority: f64| {
        Report::new(
            id,
            0,
            Source::Expert,
            security.clone(),
            cost,
            1.0,
            priority.exp_m1(),
        )
        .expect("valid report")
    };
    let reports = vec![make(0, 6.0, 10.0), make(1, 5.0, 9.0), make(2, 5.0, 9.0)];
    let pool = CandidatePool::new(&reports).expect("pool");
    let greedy = select_priority(&pool, 10.0);
    let oracle = knapsack_oracle(&pool, 10.0).expect("three reports");
    let ratio = selection_value(&reports, &greedy) / selection_value(&reports, &oracle);
    gate.check(
        "adversarial ratio is exactly 10/18",
        (ratio - 10.0 / 18.0).abs() <= 1e-12,
        format!("{ratio:.12}"),
    );

    gate.finish();
}

// ── Criterion 5: generator statistics ────────────────────────────────────

#[test]
fn criterion_5_generator_statistics() {
    let mut gate = Gate::new(5, "generator statistics");
    const N: usize = 100_000;

    for profile in &SourceProfile::defaults(DistributionPreset::Standard) {
        let source = profile.source;
        let mut rng = RngStream::new(0xBEEF, 0, &format!("acceptance/stats/{source}"));
        let mut accessibility_sum = 0.0;
        let mut costs = Vec::with_capacity(N);
        for i in 0..N {
            let report = sample_report(profile, 0, i as u64, &mut rng).expect("sample");
            accessibility_sum += report.accessibility;
            costs.push(report.supervision_cost);
        }

        let alpha = profile.accessibility_alpha;
        let expected_acc = alpha / (alpha + profile.accessibility_beta);
        let mean_acc = accessibility_sum / N as f64;
        gate.check(
            &format!("{source} accessibility mean within 0.01 of {expected_acc:.4}"),
            (mean_acc - expected_acc).abs() <= 0.01,
            format!("{mean_acc:.4}"),
        );

        costs.sort_by(f64::total_cmp);
        let median = (costs[N / 2 - 1] + costs[N / 2]) / 2.0;
        let expected_median = profile.cost_mu.exp();
        gate.check(
            &format!("{source} cost median within 2% of {expected_median:.4}"),
            (median - expected_median).abs() <= 0.02 * expected_median,
            format!("{median:.4}"),
        );

        let mut rng = RngStream::new(0xBEEF, 0, &format!("acceptance/arrivals/{source}"));
        let total: u64 = (0..N)
            .map(|_| u64::from(sample_monthly_arrivals(profile, &mut rng)))
            .sum();
        let mean_arrivals = total as f64 / N as f64;
        let rate = profile.monthly_rate;
        let tolerance = 3.0 * (rate / N as f64).sqrt(); // three standard errors
        gate.check(
            &format!("{source} arrival mean within {tolerance:.4} of {rate}"),
            (mean_arrivals - rate).abs() <= tolerance,
            format!("{mean_arrivals:.4}"),
        );

        // The floored damage variant never samples below its scale.
        let mut floored = profile.clone();
        floored.damage_model = DamageModel::Floored;
        let mut rng = RngStream::new(0xBEEF, 0, &format!("acceptance/floored/{source}"));
        let min_damage = (0..N)
            .map(|i| {
                sample_report(&floored, 0, i as u64, &mut rng)
                    .expect("sample")
                    .potential_damage
            })
            .fold(f64::INFINITY, f64::min);
        gate.check(
            &format!("{source} floored damage minimum at least {}", profile.damage_scale),
            min_damage >= profile.damage_scale,
            format!("{min_damage:.4}"),
        );
    }

    gate.finish();
}

// ── Criterion 6: incentive feedback dynamics ─────────────────────────────

#[test]
fn criterion_6_feedback_dynamics() {
    let mut gate = Gate::new(6, "incentive feedback dynamics");
    let feedback = FeedbackConfig::default();

    // A processing rate at the neutral point leaves any incentive unchanged.
    for incentive in [0.5, 0.8, 1.0, 1.25, 1.5] {
        let next = update_incentive(incentive, feedback.beta_incentive, &feedback);
        gate.check(
            &format!("fixed point at incentive {incentive}"),
            next == incentive,
            format!("{next}"),
        );
    }

    let config = SimulationConfig {
        duration_months: 50,
        policy: Policy::Priority,
        master_seed: 777,
        feedback: Some(feedback.clone()),
        ..SimulationConfig::default()
    };
    let result = run_batch(&config, BATCH_RUNS, false).expect("feedback batch");

    let mut out_of_bounds: Option<f64> = None;
    let mut expert_drift = 0.0;
    let mut community_drift = 0.0;
    for run in &result.runs {
        let states = run.feedback.as_ref().expect("feedback enabled");
        for state in states {
            for (_, &incentive) in state.incentives.iter() {
                if !(feedback.incentive_min..=feedback.incentive_max).contains(&incentive) {
                    out_of_bounds = Some(incentive);
                }
            }
        }
        let last = states.last().expect("at least one month");
        expert_drift += last.incentives[Source::Expert] - 1.0;
        community_drift += last.incentives[Source::Community] - 1.0;
    }
    expert_drift /= result.runs.len() as f64;
    community_drift /= result.runs.len() as f64;

    gate.check(
        "incentives stay within [0.5, 1.5]",
        out_of_bounds.is_none(),
        format!("{out_of_bounds:?}"),
    );
    gate.check(
        "expert incentive trend non-negative over 50 months",
        expert_drift >= 0.0,
        format!("{expert_drift:+.4}"),
    );
    gate.check(
        "community incentive trend non-positive over 50 months",
        community_drift <= 0.0,
        format!("{community_drift:+.4}"),
    );

    gate.finish();
}

// ── Criterion 7: record mapping and corpus replay ────────────────────────

const SCORE_CATEGORIES: [&str; 7] = [
    "toxicity",
    "severe_toxicity",
    "obscene",
    "identity_attack",
    "insult",
    "threat",
    "sexual_explicit",
];

fn example_record(turns: u32, overrides: &[(&str, f64)]) -> ReplayRecord {
    let mut scores: BTreeMap<String, f64> = SCORE_CATEGORIES
        .iter()
        .map(|category| (category.to_string(), 0.0))
        .collect();
    for &(category, score) in overrides {
        scores.insert(category.to_string(), score);
    }
    ReplayRecord {
        record_id: "example".into(),
        timestamp: None,
        dialogue_turns: turns,
        scores,
    }
}

fn synthetic_records(n: usize) -> Vec<ReplayRecord> {
    let mut rng = RngStream::new(0xD1A, 0, "acceptance/replay");
    (0..n)
        .map(|i| {
            let month = 1 + (i % 5) as u32;
            let day = 1 + (i % 28) as u32;
            ReplayRecord {
                record_id: format!("r{i:05}"),
                timestamp: Some(
                    Utc.with_ymd_and_hms(2024, month, day, 9, 0, 0)
                        .single()
                        .expect("valid timestamp"),
                ),
                dialogue_turns: 1 + (i % 12) as u32,
                scores: SCORE_CATEGORIES
                    .iter()
                    .map(|category| (category.to_string(), rng.random::<f64>() * 0.8))
                    .collect(),
            }
        })
        .collect()
}

#[test]
fn criterion_7_record_mapping_and_replay() {
    let mut gate = Gate::new(7, "record mapping and corpus replay");
    let mapping = MappingConfig::default();
    let close = |x: f64, expected: f64| (x - expected).abs() <= 1e-9;

    let quiet = map_record(&example_record(2, &[]), &mapping, 0, 0).expect("map");
    gate.check("quiet record: unit cost", close(quiet.supervision_cost, 1.0), format!("{}", quiet.supervision_cost));
    gate.check("quiet record: accessibility 0.2", close(quiet.accessibility, 0.2), format!("{}", quiet.accessibility));
    gate.check("quiet record: zero damage", close(quiet.potential_damage, 0.0), format!("{}", quiet.potential_damage));
    gate.check("quiet record: zero priority", close(quiet.priority, 0.0), format!("{}", quiet.priority));

    let long = map_record(&example_record(25, &[]), &mapping, 0, 1).expect("map");
    gate.check("long dialogue: accessibility capped at 1", close(long.accessibility, 1.0), format!("{}", long.accessibility));

    let flagged = map_record(
        &example_record(3, &[("identity_attack", 0.8)]),
        &mapping,
        0,
        2,
    )
    .expect("map");
    gate.check("flagged record: cost 4", close(flagged.supervision_cost, 4.0), format!("{}", flagged.supervision_cost));
    gate.check("flagged record: accessibility 0.3", close(flagged.accessibility, 0.3), format!("{}", flagged.accessibility));
    gate.check("flagged record: damage 400", close(flagged.potential_damage, 400.0), format!("{}", flagged.potential_damage));
    gate.check(
        "flagged record: priority ln(121)",
        close(flagged.priority, 121.0_f64.ln()),
        format!("{}", flagged.priority),
    );
    gate.check(
        "flagged record: routed to bias and fairness",
        flagged.risk_type == RiskType::new("Bias and Fairness"),
        flagged.risk_type.to_string(),
    );

    // A 10k-record corpus drains fully under every policy, and triage front
    // loads priority relative to arrival order.
    let records = synthetic_records(10_000);
    let replay_with = |policy: Policy| {
        let config = SimulationConfig {
            policy,
            ..SimulationConfig::default()
        };
        replay(&records, &mapping, &config).expect("replay")
    };
    let triaged = replay_with(Policy::Priority);
    let fifo = replay_with(Policy::NonPrioritised);

    for (label, result) in [("triaged", &triaged), ("arrival-order", &fifo)] {
        let processed = result
            .reports
            .iter()
            .filter(|r| r.processed_month.is_some())
            .count();
        gate.check(
            &format!("{label} replay processes every record"),
            processed == records.len(),
            format!("{processed} of {}", records.len()),
        );
        let final_backlog = result.metrics.last().expect("months").backlog_size;
        gate.check(
            &format!("{label} replay ends with an empty backlog"),
            final_backlog == 0,
            format!("{final_backlog}"),
        );
    }

    let first_processing = triaged.config.observation_months as usize;
    let triaged_first = triaged.metrics[first_processing]
        .mean_priority
        .expect("processed reports");
    let fifo_first = fifo.metrics[first_processing]
        .mean_priority
        .expect("processed reports");
    gate.check(
        "triage front-loads priority in the first processing month",
        triaged_first >= fifo_first,
        format!("{triaged_first:.4} vs {fifo_first:.4}"),
    );

    gate.finish();
}

// ── Criterion 8: byte-identical artifacts on re-run ──────────────────────

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("output directory")
        .map(|entry| {
            let entry = entry.expect("dir entry");
            let name = entry.file_name().to_string_lossy().into_owned();
            let bytes = fs::read(entry.path()).expect("artifact bytes");
            (name, bytes)
        })
        .collect()
}

/// Runs the binary twice with identical arguments into the same directory
/// and requires the artifact set to come back byte for byte.
fn assert_rerun_identical(gate: &mut Gate, label: &str, dir: &Path, args: &[&str]) {
    let mut snapshots = Vec::new();
    for attempt in 1..=2 {
        let output = Command::new(env!("CARGO_BIN_EXE_supervisim"))
            .args(args)
            .output()
            .expect("spawn supervisim");
        if !output.status.success() {
            gate.check(
                &format!("{label}: run {attempt} succeeds"),
                false,
                String::from_utf8_lossy(&output.stderr).trim().to_string(),
            );
            return;
        }
        snapshots.push(snapshot(dir));
    }
    let second = snapshots.pop().expect("two snapshots");
    let first = snapshots.pop().expect("two snapshots");

    gate.check(
        &format!("{label}: same artifact set"),
        first.keys().collect::<Vec<_>>() == second.keys().collect::<Vec<_>>(),
        format!(
            "{:?} vs {:?}",
            first.keys().collect::<Vec<_>>(),
            second.keys().collect::<Vec<_>>()
        ),
    );
    gate.check(
        &format!("{label}: artifacts present"),
        !first.is_empty(),
        "no files emitted".into(),
    );
    for (name, bytes) in &first {
        if let Some(other) = second.get(name) {
            gate.check(
                &format!("{label}: {name} byte-identical"),
                bytes == other,
                format!("{} vs {} bytes", bytes.len(), other.len()),
            );
        }
    }
}

#[test]
fn criterion_8_reproducible_artifacts() {
    let mut gate = Gate::new(8, "byte-identical artifacts on re-run");
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = |name: &str| tmp.path().join(name);
    let path = |p: &Path| p.to_str().expect("utf-8 path").to_owned();

    let sim_dir = dir("simulate");
    assert_rerun_identical(
        &mut gate,
        "simulate",
        &sim_dir,
        &[
            "simulate", "--seed", "7", "--policy", "priority", "--out", &path(&sim_dir),
            "--stamp", "gate8",
        ],
    );

    let batch_dir = dir("batch");
    assert_rerun_identical(
        &mut gate,
        "batch",
        &batch_dir,
        &[
            "batch", "--seed", "11", "--runs", "2", "--policy", "all", "--out",
            &path(&batch_dir), "--stamp", "gate8",
        ],
    );

    // Small deterministic corpus for the replay command.
    let corpus = tmp.path().join("corpus.csv");
    let mut rows = String::from(
        "record_id,timestamp,turns,toxicity,severe_toxicity,obscene,identity_attack,insult,threat,sexual_explicit\n",
    );
    for i in 0..12 {
        let month = if i < 6 { "01" } else { "02" };
        let scores: Vec<String> = (0..7)
            .map(|j| format!("{:.2}", ((i + j) % 5) as f64 * 0.04))
            .collect();
        rows.push_str(&format!(
            "c{i:02},2024-{month}-{:02},{},{}\n",
            1 + i,
            1 + i % 4,
            scores.join(",")
        ));
    }
    fs::write(&corpus, rows).expect("write corpus");
    let replay_dir = dir("replay");
    assert_rerun_identical(
        &mut gate,
        "replay",
        &replay_dir,
        &[
            "replay", "--input", &path(&corpus), "--seed", "3", "--policy", "priority",
            "--out", &path(&replay_dir), "--stamp", "gate8",
        ],
    );

    let series = tmp.path().join("series.csv");
    fs::write(&series, "month,count\n0,10\n1,12\n2,15\n3,14\n4,18\n5,21\n").expect("write series");
    let forecast_dir = dir("forecast");
    assert_rerun_identical(
        &mut gate,
        "forecast",
        &forecast_dir,
        &[
            "forecast", "--input", &path(&series), "--horizon", "6", "--out",
            &path(&forecast_dir), "--stamp", "gate8",
        ],
    );

    gate.finish();
}

// ── Criterion 9: forecast fixed points and scenario ordering ─────────────

#[test]
fn criterion_9_forecast_fixed_points() {
    let mut gate = Gate::new(9, "forecast fixed points and scenario ordering");

    // Constant series with dyadic smoothing: the fit is an exact fixed point.
    let constant = IncidentSeries::new((0..8).map(|t| (t, 10.0)).collect()).expect("series");
    let model = fit_holt(&constant, 0.5, 0.25).expect("fit");
    gate.check("constant series: exact level", model.level == 10.0, format!("{}", model.level));
    gate.check("constant series: exact zero trend", model.trend == 0.0, format!("{}", model.trend));
    gate.check(
        "constant series: zero one-step errors",
        model.one_step_errors.iter().all(|&e| e == 0.0),
        format!("{:?}", model.one_step_errors),
    );

    // A pure linear trend with full smoothing is recovered exactly.
    let linear =
        IncidentSeries::new((1..=10).map(|t| (t, 3.0 * t as f64)).collect()).expect("series");
    let model = fit_holt(&linear, 1.0, 1.0).expect("fit");
    gate.check("linear series: exact level", model.level == 30.0, format!("{}", model.level));
    gate.check("linear series: exact trend", model.trend == 3.0, format!("{}", model.trend));
    gate.check(
        "linear series: zero one-step errors",
        model.one_step_errors.iter().all(|&e| e == 0.0),
        format!("{:?}", model.one_step_errors),
    );
    let projection = project_scenarios(&model, 12, ScenarioMultipliers::default());
    let exact = (1..=12).all(|h| projection.average[h - 1] == 30.0 + 3.0 * h as f64);
    gate.check(
        "linear series: exact central projection",
        exact,
        format!("{:?}", projection.average),
    );

    // Non-negative fitted trend orders the scenarios pointwise.
    let noisy = IncidentSeries::new(
        (0..24)
            .map(|t| (t, 2.0 * t as f64 + [0.0, 1.5, -1.0, 0.7][t as usize % 4]))
            .collect(),
    )
    .expect("series");
    let model = fit_holt(&noisy, 0.5, 0.3).expect("fit");
    gate.check(
        "rising series: non-negative fitted trend",
        model.trend >= 0.0,
        format!("{}", model.trend),
    );
    let projection = project_scenarios(&model, 24, ScenarioMultipliers::default());
    let ordered = (0..24).all(|h| {
        projection.best[h] <= projection.average[h] && projection.average[h] <= projection.worst[h]
    });
    gate.check(
        "rising series: best ≤ average ≤ worst pointwise",
        ordered,
        format!(
            "first month: best {:.2}, average {:.2}, worst {:.2}",
            projection.best[0], projection.average[0], projection.worst[0]
        ),
    );

    gate.finish();
}
