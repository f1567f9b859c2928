//! Report attributes and the priority score that triages them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Where a report came from. The three streams differ in volume, cost,
/// accessibility and damage profiles; see [`crate::profile::SourceProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Community,
    Crowdsourced,
    Expert,
}

impl Source {
    /// All sources, in the canonical order used for stream labels, generation
    /// and output columns.
    pub const ALL: [Source; 3] = [Source::Community, Source::Crowdsourced, Source::Expert];

    pub fn label(self) -> &'static str {
        match self {
            Source::Community => "community",
            Source::Crowdsourced => "crowdsourced",
            Source::Expert => "expert",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Open-ended risk-type label. The built-in generation profiles use the
/// labels in [`risk_types`]; replay classification adds its own. Labels are
/// compared verbatim, so "Security" from a generated report and "Security"
/// from a replayed one are the same type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskType(String);

impl RiskType {
    pub fn new(label: impl Into<String>) -> Self {
        RiskType(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for RiskType {
    fn from(label: &str) -> Self {
        RiskType::new(label)
    }
}

impl fmt::Display for RiskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical labels used by the default source profiles and the replay
/// classifier.
pub mod risk_types {
    pub const PRIVACY: &str = "Privacy";
    pub const MISINFORMATION: &str = "Misinformation";
    pub const BIAS: &str = "Bias";
    pub const USER_EXPERIENCE: &str = "User experience";
    pub const CONTENT_MODERATION: &str = "Content moderation";
    pub const SECURITY: &str = "Security";
    pub const ETHICAL: &str = "Ethical";
    pub const ROBUSTNESS: &str = "Robustness";
    pub const LONG_TERM_SOCIETAL_IMPACT: &str = "Long-term societal impact";
    pub const AI_ALIGNMENT: &str = "AI alignment";
    pub const INTERPRETABILITY: &str = "Interpretability";
    pub const COMPLIANCE_AND_LEGAL: &str = "Compliance and Legal";
    pub const BIAS_AND_FAIRNESS: &str = "Bias and Fairness";
}

/// Rejected report attribute.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttributeError {
    #[error("accessibility must lie in [0, 1], got {0}")]
    Accessibility(f64),
    #[error("potential damage must be finite and non-negative, got {0}")]
    Damage(f64),
    #[error("supervision cost must be finite and positive, got {0}")]
    Cost(f64),
}

/// Priority of a report: `ln(1 + accessibility · damage)`.
///
/// The score depends on the attributes only through their product, so a
/// highly accessible low-damage risk can outrank an obscure severe one. The
/// log keeps the heavy damage tail from dominating the triage key outright.
pub fn priority_score(accessibility: f64, damage: f64) -> Result<f64, AttributeError> {
    if !(0.0..=1.0).contains(&accessibility) {
        return Err(AttributeError::Accessibility(accessibility));
    }
    if !damage.is_finite() || damage < 0.0 {
        return Err(AttributeError::Damage(damage));
    }
    Ok((accessibility * damage).ln_1p())
}

/// One risk report flowing through the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Unique within a run; assigned in generation (or ingest) order.
    pub id: u64,
    pub arrival_month: u32,
    /// Set by the engine when a policy selects the report; `None` while it
    /// sits in the backlog.
    pub processed_month: Option<u32>,
    pub source: Source,
    pub risk_type: RiskType,
    pub supervision_cost: f64,
    pub accessibility: f64,
    pub potential_damage: f64,
    /// Always `priority_score(accessibility, potential_damage)`.
    pub priority: f64,
}

impl Report {
    /// Builds an unprocessed report, deriving `priority` from the attributes.
    pub fn new(
        id: u64,
        arrival_month: u32,
        source: Source,
        risk_type: RiskType,
        supervision_cost: f64,
        accessibility: f64,
        potential_damage: f64,
    ) -> Result<Self, AttributeError> {
        if !supervision_cost.is_finite() || supervision_cost <= 0.0 {
            return Err(AttributeError::Cost(supervision_cost));
        }
        let priority = priority_score(accessibility, potential_damage)?;
        Ok(Report {
            id,
            arrival_month,
            processed_month: None,
            source,
            risk_type,
            supervision_cost,
            accessibility,
            potential_damage,
            priority,
        })
    }
}
