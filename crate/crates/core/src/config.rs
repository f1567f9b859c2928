//! Simulation configuration and validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feedback::FeedbackConfig;
use crate::profile::{DistributionPreset, SourceProfile};
use crate::report::Source;

/// Supervision policy applied each processing month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// First-in, first-out on arrival order.
    NonPrioritised,
    /// Uniformly shuffled order.
    Random,
    /// Highest priority score first.
    Priority,
    /// Priority score discounted by same-type repetition.
    Diversity,
}

impl Policy {
    pub const ALL: [Policy; 4] = [
        Policy::NonPrioritised,
        Policy::Random,
        Policy::Priority,
        Policy::Diversity,
    ];

    /// Tag used in output file names.
    pub fn file_tag(self) -> &'static str {
        match self {
            Policy::NonPrioritised => "non-prioritized",
            Policy::Random => "random_fairness",
            Policy::Priority => "prioritized",
            Policy::Diversity => "diversity_prioritized",
        }
    }

    /// Configuration / display name (matches the serde form).
    pub fn name(self) -> &'static str {
        match self {
            Policy::NonPrioritised => "non_prioritised",
            Policy::Random => "random",
            Policy::Priority => "priority",
            Policy::Diversity => "diversity",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full description of one simulation run (or batch of runs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    /// Total horizon in months, observation period included.
    pub duration_months: u32,
    /// Leading months that only accumulate arrivals; capacity is calibrated
    /// from their average monthly cost.
    pub observation_months: u32,
    /// Monthly capacity as a fraction of the observed average monthly cost.
    pub capacity_fraction: f64,
    pub policy: Policy,
    pub master_seed: u64,
    /// One profile per source.
    pub profiles: Vec<SourceProfile>,
    /// Incentive/occurrence feedback loop; `None` disables it.
    pub feedback: Option<FeedbackConfig>,
    /// When the next report in FIFO order does not fit, `false` stops the
    /// month there (capacity left idle); `true` keeps scanning for smaller
    /// reports that still fit.
    pub fifo_skip_mode: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            duration_months: 15,
            observation_months: 3,
            capacity_fraction: 0.5,
            policy: Policy::NonPrioritised,
            master_seed: 0,
            profiles: SourceProfile::defaults(DistributionPreset::default()),
            feedback: None,
            fifo_skip_mode: false,
        }
    }
}

/// One violated constraint, tagged with the offending field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// All configuration problems found, reported together.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} problem(s)):", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  {}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

/// Tolerance within which a risk prior is renormalized instead of rejected.
const PRIOR_SUM_TOLERANCE: f64 = 1e-6;

/// Checks every config invariant, renormalizing risk priors whose sum is
/// within `1e-6` of one. Returns the corrected config, or every violation
/// found.
pub fn validate_config(mut config: SimulationConfig) -> Result<SimulationConfig, ConfigError> {
    let mut violations = Vec::new();

    if config.observation_months < 1 {
        violations.push(Violation::new(
            "observation_months",
            "must be at least 1",
        ));
    }
    if config.duration_months <= config.observation_months {
        violations.push(Violation::new(
            "duration_months",
            format!(
                "must exceed observation_months ({} ≤ {})",
                config.duration_months, config.observation_months
            ),
        ));
    }
    if !(config.capacity_fraction.is_finite() && config.capacity_fraction > 0.0) {
        violations.push(Violation::new(
            "capacity_fraction",
            format!("must be a positive finite number, got {}", config.capacity_fraction),
        ));
    }

    for source in Source::ALL {
        match config.profiles.iter().filter(|p| p.source == source).count() {
            1 => {}
            0 => violations.push(Violation::new(
                "profiles",
                format!("missing profile for source {source}"),
            )),
            n => violations.push(Violation::new(
                "profiles",
                format!("{n} profiles for source {source}, expected exactly one"),
            )),
        }
    }

    for profile in &mut config.profiles {
        let field = |name: &str| format!("profiles[{}].{}", profile.source, name);
        if !(profile.monthly_rate.is_finite() && profile.monthly_rate >= 0.0) {
            violations.push(Violation::new(
                field("monthly_rate"),
                format!("must be finite and non-negative, got {}", profile.monthly_rate),
            ));
        }
        if !profile.cost_mu.is_finite() {
            violations.push(Violation::new(
                field("cost_mu"),
                format!("must be finite, got {}", profile.cost_mu),
            ));
        }
        if !(profile.cost_sigma.is_finite() && profile.cost_sigma >= 0.0) {
            violations.push(Violation::new(
                field("cost_sigma"),
                format!("must be finite and non-negative, got {}", profile.cost_sigma),
            ));
        }
        for (name, value) in [
            ("accessibility_alpha", profile.accessibility_alpha),
            ("accessibility_beta", profile.accessibility_beta),
            ("damage_shape", profile.damage_shape),
            ("damage_scale", profile.damage_scale),
        ] {
            if !(value.is_finite() && value > 0.0) {
                violations.push(Violation::new(
                    field(name),
                    format!("must be finite and positive, got {value}"),
                ));
            }
        }

        if profile.risk_prior.is_empty() {
            violations.push(Violation::new(field("risk_prior"), "must not be empty"));
            continue;
        }
        if let Some((t, w)) = profile
            .risk_prior
            .iter()
            .find(|(_, w)| !(w.is_finite() && *w >= 0.0))
        {
            violations.push(Violation::new(
                field("risk_prior"),
                format!("weight for {t} must be finite and non-negative, got {w}"),
            ));
            continue;
        }
        let total: f64 = profile.risk_prior.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() <= PRIOR_SUM_TOLERANCE {
            for (_, w) in &mut profile.risk_prior {
                *w /= total;
            }
        } else {
            violations.push(Violation::new(
                field("risk_prior"),
                format!("weights sum to {total}, expected 1 within {PRIOR_SUM_TOLERANCE}"),
            ));
        }
    }

    if let Some(feedback) = &config.feedback {
        violations.extend(feedback.validate());
    }

    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError { violations })
    }
}
