//! Budget-constrained selection policies over a monthly candidate pool.
//!
//! Four production rules (FIFO, random, priority-greedy, diversity-greedy)
//! plus an exact knapsack oracle used by tests to bound the greedy gap. All
//! are pure functions: pool in, selection out.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::config::Policy;
use crate::report::{Report, RiskType};

/// Largest pool [`knapsack_oracle`] accepts (2^n subsets are enumerated).
pub const MAX_ORACLE_POOL: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("candidate pool contains already-processed report {0}")]
    ProcessedReport(u64),
    #[error("candidate pool contains duplicate report id {0}")]
    DuplicateId(u64),
    #[error("knapsack oracle handles pools of at most {MAX_ORACLE_POOL} reports, got {0}")]
    PoolTooLarge(usize),
}

/// The reports a policy may choose from in one month: backlog plus the
/// month's arrivals, none of them processed, held in (arrival_month, id)
/// order.
#[derive(Debug, Clone)]
pub struct CandidatePool<'a> {
    reports: Vec<&'a Report>,
}

impl<'a> CandidatePool<'a> {
    /// Validates and orders the pending reports. Rejects processed reports
    /// and duplicate ids rather than silently dropping them.
    pub fn new(reports: impl IntoIterator<Item = &'a Report>) -> Result<Self, PolicyError> {
        let mut reports: Vec<&Report> = reports.into_iter().collect();
        let mut seen = HashSet::with_capacity(reports.len());
        for r in &reports {
            if r.processed_month.is_some() {
                return Err(PolicyError::ProcessedReport(r.id));
            }
            if !seen.insert(r.id) {
                return Err(PolicyError::DuplicateId(r.id));
            }
        }
        reports.sort_by_key(|r| (r.arrival_month, r.id));
        Ok(CandidatePool { reports })
    }

    pub fn reports(&self) -> &[&'a Report] {
        &self.reports
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}

/// Reports chosen for one month, in the order the policy picked them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Selection {
    pub ids: Vec<u64>,
    pub total_cost: f64,
}

impl Selection {
    fn push(&mut self, report: &Report) {
        self.ids.push(report.id);
        self.total_cost += report.supervision_cost;
    }
}

/// Deterministic triage order: priority descending, then earlier arrival,
/// then smaller id.
fn triage_order(a: &Report, b: &Report) -> Ordering {
    b.priority
        .total_cmp(&a.priority)
        .then_with(|| a.arrival_month.cmp(&b.arrival_month))
        .then_with(|| a.id.cmp(&b.id))
}

/// Scans `order`, taking every report that fits the residual capacity.
fn take_fitting<'a>(order: impl IntoIterator<Item = &'a Report>, capacity: f64) -> Selection {
    let mut selection = Selection::default();
    let mut remaining = capacity;
    for report in order {
        if report.supervision_cost <= remaining {
            remaining -= report.supervision_cost;
            selection.push(report);
        }
    }
    selection
}

/// First-in, first-out. In blocking mode the month ends at the first report
/// that does not fit — strict first-come-first-served, even if later cheap
/// reports would fit. Skip mode keeps scanning instead.
pub fn select_fifo(pool: &CandidatePool, capacity: f64, skip_mode: bool) -> Selection {
    assert!(capacity > 0.0, "capacity must be positive");
    if skip_mode {
        return take_fitting(pool.reports().iter().copied(), capacity);
    }
    let mut selection = Selection::default();
    let mut remaining = capacity;
    for report in pool.reports() {
        if report.supervision_cost > remaining {
            break;
        }
        remaining -= report.supervision_cost;
        selection.push(report);
    }
    selection
}

/// Uniformly shuffles the pool, then fills capacity in shuffled order,
/// skipping reports that no longer fit.
pub fn select_random(pool: &CandidatePool, capacity: f64, rng: &mut impl Rng) -> Selection {
    assert!(capacity > 0.0, "capacity must be positive");
    let mut order: Vec<&Report> = pool.reports().to_vec();
    order.shuffle(rng);
    take_fitting(order, capacity)
}

/// Greedy approximation of the budgeted priority arg-max: highest priority
/// first, skipping reports that do not fit. Capacity-maximal but not always
/// optimal — see [`knapsack_oracle`].
pub fn select_priority(pool: &CandidatePool, capacity: f64) -> Selection {
    assert!(capacity > 0.0, "capacity must be positive");
    let mut order: Vec<&Report> = pool.reports().to_vec();
    order.sort_by(|a, b| triage_order(a, b));
    take_fitting(order, capacity)
}

/// Repetition discount for picking `report` given what is already selected:
/// `1 / (1 + n_same)` where `n_same` counts selected reports of the same
/// risk type.
pub fn diversity_score(report: &Report, already_selected: &[&Report]) -> f64 {
    let n_same = already_selected
        .iter()
        .filter(|s| s.risk_type == report.risk_type)
        .count();
    1.0 / (1.0 + n_same as f64)
}

/// Sequential greedy over `priority · diversity_score`: each round picks the
/// fitting report with the best discounted score, so piling onto one risk
/// type gets progressively less attractive. Ties fall back to the plain
/// triage order.
pub fn select_diversity(pool: &CandidatePool, capacity: f64) -> Selection {
    assert!(capacity > 0.0, "capacity must be positive");
    let mut selection = Selection::default();
    let mut remaining = capacity;
    let mut pending: Vec<&Report> = pool.reports().to_vec();
    let mut selected_counts: HashMap<&RiskType, usize> = HashMap::new();

    loop {
        let best = pending
            .iter()
            .enumerate()
            .filter(|(_, r)| r.supervision_cost <= remaining)
            .max_by(|(_, a), (_, b)| {
                let score = |r: &Report| {
                    let n_same = selected_counts.get(&r.risk_type).copied().unwrap_or(0);
                    r.priority / (1.0 + n_same as f64)
                };
                score(a)
                    .total_cmp(&score(b))
                    .then_with(|| triage_order(b, a)) // max_by keeps the later winner, so flip
            })
            .map(|(idx, _)| idx);
        let Some(idx) = best else { break };
        let report = pending.swap_remove(idx);
        *selected_counts.entry(&report.risk_type).or_insert(0) += 1;
        remaining -= report.supervision_cost;
        selection.push(report);
    }
    selection
}

/// Exact budgeted arg-max by exhaustive enumeration; the test oracle for the
/// greedy rules. Ties resolve to the lexicographically smallest sorted id
/// set. Ids are returned sorted ascending.
pub fn knapsack_oracle(pool: &CandidatePool, capacity: f64) -> Result<Selection, PolicyError> {
    assert!(capacity > 0.0, "capacity must be positive");
    let n = pool.len();
    if n > MAX_ORACLE_POOL {
        return Err(PolicyError::PoolTooLarge(n));
    }
    let reports = pool.reports();
    let mut best_ids: Vec<u64> = Vec::new();
    let mut best_priority = 0.0f64;
    let mut best_cost = 0.0f64;
    for mask in 0u32..(1u32 << n) {
        let mut cost = 0.0;
        let mut priority = 0.0;
        for (i, r) in reports.iter().enumerate() {
            if mask & (1 << i) != 0 {
                cost += r.supervision_cost;
                priority += r.priority;
            }
        }
        if cost > capacity {
            continue;
        }
        let better = match priority.total_cmp(&best_priority) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                let mut ids: Vec<u64> = reports
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, r)| r.id)
                    .collect();
                ids.sort_unstable();
                !ids.is_empty() && (best_ids.is_empty() || ids < best_ids)
            }
        };
        if better {
            best_ids = reports
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, r)| r.id)
                .collect();
            best_ids.sort_unstable();
            best_priority = priority;
            best_cost = cost;
        }
    }
    Ok(Selection {
        ids: best_ids,
        total_cost: best_cost,
    })
}

/// Dispatches to the rule for `policy`. The RNG is only consumed by
/// [`Policy::Random`]; passing it unconditionally keeps call sites uniform.
pub fn select(
    policy: Policy,
    pool: &CandidatePool,
    capacity: f64,
    fifo_skip_mode: bool,
    rng: &mut impl Rng,
) -> Selection {
    match policy {
        Policy::NonPrioritised => select_fifo(pool, capacity, fifo_skip_mode),
        Policy::Random => select_random(pool, capacity, rng),
        Policy::Priority => select_priority(pool, capacity),
        Policy::Diversity => select_diversity(pool, capacity),
    }
}
