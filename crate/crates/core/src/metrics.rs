//! Per-month bookkeeping: arrivals, processing, backlog and processed-report
//! statistics.

use std::collections::BTreeMap;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::report::{Report, RiskType, Source};

/// Fixed-shape map from [`Source`] to a value; cheaper and more explicit
/// than a hash map for the three known sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceMap<T> {
    pub community: T,
    pub crowdsourced: T,
    pub expert: T,
}

impl<T> SourceMap<T> {
    pub fn from_fn(mut f: impl FnMut(Source) -> T) -> Self {
        SourceMap {
            community: f(Source::Community),
            crowdsourced: f(Source::Crowdsourced),
            expert: f(Source::Expert),
        }
    }

    pub fn uniform(value: T) -> Self
    where
        T: Clone,
    {
        SourceMap::from_fn(|_| value.clone())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Source, &T)> {
        Source::ALL.iter().map(move |&s| (s, &self[s]))
    }

    pub fn map<U>(&self, mut f: impl FnMut(Source, &T) -> U) -> SourceMap<U> {
        SourceMap::from_fn(|s| f(s, &self[s]))
    }
}

impl<T> Index<Source> for SourceMap<T> {
    type Output = T;

    fn index(&self, source: Source) -> &T {
        match source {
            Source::Community => &self.community,
            Source::Crowdsourced => &self.crowdsourced,
            Source::Expert => &self.expert,
        }
    }
}

impl<T> IndexMut<Source> for SourceMap<T> {
    fn index_mut(&mut self, source: Source) -> &mut T {
        match source {
            Source::Community => &mut self.community,
            Source::Crowdsourced => &mut self.crowdsourced,
            Source::Expert => &mut self.expert,
        }
    }
}

/// How many processed-report ids each month's metrics retain, as a compact
/// record of what the policy reached for first.
pub const FIRST_PROCESSED_LOG: usize = 10;

/// Everything recorded about one simulated month.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthlyMetrics {
    pub month: u32,
    pub arrivals_by_source: SourceMap<u32>,
    pub processed_by_source: SourceMap<u32>,
    pub processed_by_risk_type: BTreeMap<RiskType, u32>,
    /// Pending reports at month end (B_t).
    pub backlog_size: u32,
    /// Monthly budget; `None` during the observation window, when nothing is
    /// processed.
    pub capacity: Option<f64>,
    /// Total supervision cost of this month's processed reports.
    pub capacity_used: f64,
    /// Means over this month's processed reports; `None` when none were.
    pub mean_cost: Option<f64>,
    pub mean_accessibility: Option<f64>,
    pub mean_damage: Option<f64>,
    pub mean_priority: Option<f64>,
    /// Total potential damage of this month's processed reports.
    pub damage_mitigated: f64,
    /// Up to [`FIRST_PROCESSED_LOG`] processed ids in selection order.
    pub first_processed_ids: Vec<u64>,
}

impl MonthlyMetrics {
    /// Derives a month's metrics from what the policy processed.
    /// `processed` must be in selection order.
    pub fn compute(
        month: u32,
        arrivals_by_source: SourceMap<u32>,
        processed: &[&Report],
        backlog_size: u32,
        capacity: Option<f64>,
    ) -> Self {
        let mut processed_by_source = SourceMap::default();
        let mut processed_by_risk_type: BTreeMap<RiskType, u32> = BTreeMap::new();
        let (mut cost, mut acc, mut dmg, mut pri) = (0.0, 0.0, 0.0, 0.0);
        for r in processed {
            processed_by_source[r.source] += 1;
            *processed_by_risk_type.entry(r.risk_type.clone()).or_insert(0) += 1;
            cost += r.supervision_cost;
            acc += r.accessibility;
            dmg += r.potential_damage;
            pri += r.priority;
        }
        let n = processed.len() as f64;
        let mean = |total: f64| (!processed.is_empty()).then(|| total / n);
        MonthlyMetrics {
            month,
            arrivals_by_source,
            processed_by_source,
            processed_by_risk_type,
            backlog_size,
            capacity,
            capacity_used: cost,
            mean_cost: mean(cost),
            mean_accessibility: mean(acc),
            mean_damage: mean(dmg),
            mean_priority: mean(pri),
            damage_mitigated: dmg,
            first_processed_ids: processed
                .iter()
                .take(FIRST_PROCESSED_LOG)
                .map(|r| r.id)
                .collect(),
        }
    }

    pub fn arrivals_total(&self) -> u32 {
        Source::ALL.iter().map(|&s| self.arrivals_by_source[s]).sum()
    }

    pub fn processed_total(&self) -> u32 {
        Source::ALL.iter().map(|&s| self.processed_by_source[s]).sum()
    }
}
