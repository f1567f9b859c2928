//! Incentive and occurrence-rate feedback: processing outcomes reshape next
//! month's report generation.
//!
//! Each source carries an incentive level `I_s` that scales its arrival
//! rate: sources whose reports get processed are encouraged, neglected ones
//! drift down. Each risk type carries an occurrence rate `O_rt` that
//! reweights the risk-type priors: processing a type suppresses it, and it
//! recovers over time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::Violation;
use crate::metrics::{MonthlyMetrics, SourceMap};
use crate::profile::SourceProfile;
use crate::report::{RiskType, Source};

/// Constants of the feedback dynamics. All have working defaults; the
/// bounds keep incentives from collapsing ("discouraging level") or
/// exploding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackConfig {
    /// Incentive adjustment speed (γ_I).
    pub gamma_incentive: f64,
    /// Expected processing rate (β_I): the neutral point of the incentive
    /// update.
    pub beta_incentive: f64,
    pub incentive_min: f64,
    pub incentive_max: f64,
    /// Mitigation effectiveness (γ_O): occurrence drop per processed report
    /// of the type.
    pub gamma_occurrence: f64,
    /// Recovery rate (δ_O): occurrence regained per month.
    pub delta_occurrence: f64,
    pub occurrence_min: f64,
    pub occurrence_max: f64,
    pub initial_incentives: SourceMap<f64>,
    /// Initial occurrence per risk type; types not listed start at 1.
    pub initial_occurrence: BTreeMap<RiskType, f64>,
    /// When `true`, occurrence only recovers in months where no report of
    /// the type was processed; default applies recovery unconditionally
    /// after mitigation.
    pub recovery_requires_neglect: bool,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            gamma_incentive: 0.1,
            beta_incentive: 0.5,
            incentive_min: 0.5,
            incentive_max: 1.5,
            gamma_occurrence: 0.05,
            delta_occurrence: 0.1,
            occurrence_min: 0.2,
            occurrence_max: 2.0,
            initial_incentives: SourceMap::uniform(1.0),
            initial_occurrence: BTreeMap::new(),
            recovery_requires_neglect: false,
        }
    }
}

impl FeedbackConfig {
    /// Constraint violations, tagged for config validation.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut check = |field: &str, ok: bool, message: String| {
            if !ok {
                violations.push(Violation {
                    field: format!("feedback.{field}"),
                    message,
                });
            }
        };
        check(
            "incentive_min",
            self.incentive_min > 0.0 && self.incentive_min <= self.incentive_max,
            format!(
                "bounds must satisfy 0 < min ≤ max, got [{}, {}]",
                self.incentive_min, self.incentive_max
            ),
        );
        check(
            "occurrence_min",
            self.occurrence_min > 0.0 && self.occurrence_min <= self.occurrence_max,
            format!(
                "bounds must satisfy 0 < min ≤ max, got [{}, {}]",
                self.occurrence_min, self.occurrence_max
            ),
        );
        for (field, value) in [
            ("gamma_incentive", self.gamma_incentive),
            ("gamma_occurrence", self.gamma_occurrence),
            ("delta_occurrence", self.delta_occurrence),
        ] {
            check(field, value.is_finite() && value >= 0.0, format!("must be finite and non-negative, got {value}"));
        }
        check(
            "beta_incentive",
            (0.0..=1.0).contains(&self.beta_incentive),
            format!("must lie in [0, 1], got {}", self.beta_incentive),
        );
        for (source, &i) in self.initial_incentives.iter() {
            check(
                "initial_incentives",
                (self.incentive_min..=self.incentive_max).contains(&i),
                format!("initial incentive for {source} out of bounds: {i}"),
            );
        }
        for (t, &o) in &self.initial_occurrence {
            check(
                "initial_occurrence",
                (self.occurrence_min..=self.occurrence_max).contains(&o),
                format!("initial occurrence for {t} out of bounds: {o}"),
            );
        }
        violations
    }
}

/// Fraction of this month's arrivals from `source` that got processed,
/// clipped to [0, 1]. Backlog draining can push the raw ratio above 1; a
/// month with no arrivals is neutral and returns β_I, leaving the incentive
/// unchanged.
pub fn processing_rate(source: Source, metrics: &MonthlyMetrics, config: &FeedbackConfig) -> f64 {
    let arrivals = metrics.arrivals_by_source[source];
    if arrivals == 0 {
        return config.beta_incentive;
    }
    let rate = f64::from(metrics.processed_by_source[source]) / f64::from(arrivals);
    rate.clamp(0.0, 1.0)
}

/// `clip(I + γ_I·(π − β_I)·I, I_min, I_max)`: multiplicative drift toward
/// more (or less) reporting, with saturation at the bounds.
pub fn update_incentive(incentive: f64, pi: f64, config: &FeedbackConfig) -> f64 {
    let next = incentive + config.gamma_incentive * (pi - config.beta_incentive) * incentive;
    next.clamp(config.incentive_min, config.incentive_max)
}

/// Two-stage occurrence update: mitigation `max(O_min, O − γ_O·M_rt)`, then
/// recovery `min(O_max, O′ + δ_O)`. With `recovery_requires_neglect`,
/// recovery is skipped in months where the type was processed.
pub fn update_occurrence(occurrence: f64, processed_count: u32, config: &FeedbackConfig) -> f64 {
    let mitigated =
        (occurrence - config.gamma_occurrence * f64::from(processed_count)).max(config.occurrence_min);
    if config.recovery_requires_neglect && processed_count > 0 {
        return mitigated;
    }
    (mitigated + config.delta_occurrence).min(config.occurrence_max)
}

/// Live feedback variables: one incentive per source, one occurrence rate
/// per risk type, plus the fixed reference the priors are reweighted
/// against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackState {
    pub incentives: SourceMap<f64>,
    pub occurrence: BTreeMap<RiskType, f64>,
    /// Initial occurrence rates (O_ref); prior weights scale by O/O_ref.
    pub reference: BTreeMap<RiskType, f64>,
}

impl FeedbackState {
    /// Initial state covering every risk type the profiles can generate;
    /// types without a configured initial occurrence start at 1.
    pub fn initialize(config: &FeedbackConfig, profiles: &[SourceProfile]) -> Self {
        let mut occurrence = config.initial_occurrence.clone();
        for profile in profiles {
            for (risk_type, _) in &profile.risk_prior {
                occurrence.entry(risk_type.clone()).or_insert(1.0);
            }
        }
        FeedbackState {
            incentives: config.initial_incentives,
            occurrence: occurrence.clone(),
            reference: occurrence,
        }
    }

    /// Month-end update from that month's metrics; the new state shapes the
    /// next month's generation.
    pub fn advance(&mut self, metrics: &MonthlyMetrics, config: &FeedbackConfig) {
        for source in Source::ALL {
            let pi = processing_rate(source, metrics, config);
            self.incentives[source] = update_incentive(self.incentives[source], pi, config);
        }
        for (risk_type, occurrence) in &mut self.occurrence {
            let processed = metrics
                .processed_by_risk_type
                .get(risk_type)
                .copied()
                .unwrap_or(0);
            *occurrence = update_occurrence(*occurrence, processed, config);
        }
    }

    /// Applies the feedback coupling to the base profiles: arrival rates
    /// scale by the source incentive, and risk priors are reweighted by
    /// `O_rt / O_ref` and renormalized.
    pub fn effective_profiles(&self, base: &[SourceProfile]) -> Vec<SourceProfile> {
        base.iter()
            .map(|profile| {
                let mut adjusted = profile.clone();
                adjusted.monthly_rate *= self.incentives[profile.source];
                let factor = |t: &RiskType| match (self.occurrence.get(t), self.reference.get(t)) {
                    (Some(o), Some(r)) => o / r,
                    _ => 1.0,
                };
                for (risk_type, weight) in &mut adjusted.risk_prior {
                    *weight *= factor(risk_type);
                }
                let total: f64 = adjusted.risk_prior.iter().map(|(_, w)| w).sum();
                for (_, weight) in &mut adjusted.risk_prior {
                    *weight /= total;
                }
                adjusted
            })
            .collect()
    }
}
