//! Per-source generation profiles: arrival rates, attribute distributions
//! and risk-type priors.

use serde::{Deserialize, Serialize};

use crate::report::{risk_types, RiskType, Source};

/// How potential damage is drawn from the Pareto family with a given
/// `shape` and `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DamageModel {
    /// `scale · (U^(-1/shape) - 1)`: support `[0, ∞)`, median
    /// `scale · (2^(1/shape) - 1)`. Most mass sits well below `scale`, with
    /// the same tail index as the floored variant.
    #[default]
    Shifted,
    /// `scale · U^(-1/shape)`: support `[scale, ∞)`, median
    /// `scale · 2^(1/shape)`. Every draw is at least `scale`.
    Floored,
}

/// Which set of built-in distribution parameters to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionPreset {
    /// Default parameter set (expert damage scale 500).
    #[default]
    Standard,
    /// Alternative set with compressed damage scales (crowdsourced 150,
    /// expert 250); shapes and all other parameters are shared.
    Fitted,
}

/// Everything the generator needs to synthesize one source's reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceProfile {
    pub source: Source,
    /// Mean arrivals per month (Poisson).
    pub monthly_rate: f64,
    /// Log-normal supervision cost: location and scale of the underlying
    /// normal.
    pub cost_mu: f64,
    pub cost_sigma: f64,
    /// Beta accessibility parameters.
    pub accessibility_alpha: f64,
    pub accessibility_beta: f64,
    /// Pareto-family damage parameters; see [`DamageModel`].
    pub damage_shape: f64,
    pub damage_scale: f64,
    #[serde(default)]
    pub damage_model: DamageModel,
    /// Risk-type prior. Order is preserved when sampling, so equal configs
    /// generate identical streams. Weights must sum to 1.
    pub risk_prior: Vec<(RiskType, f64)>,
}

impl SourceProfile {
    /// The three built-in profiles, in [`Source::ALL`] order.
    ///
    /// Community reports arrive in volume, cost little, are easy to act on
    /// and cause modest damage. Expert reports are the opposite on every
    /// axis; crowdsourced sits between.
    pub fn defaults(preset: DistributionPreset) -> Vec<SourceProfile> {
        let (crowd_scale, expert_scale) = match preset {
            DistributionPreset::Standard => (200.0, 500.0),
            DistributionPreset::Fitted => (150.0, 250.0),
        };
        vec![
            SourceProfile {
                source: Source::Community,
                monthly_rate: 25.0,
                cost_mu: 1.5,
                cost_sigma: 0.5,
                accessibility_alpha: 5.0,
                accessibility_beta: 2.0,
                damage_shape: 3.0,
                damage_scale: 100.0,
                damage_model: DamageModel::default(),
                risk_prior: prior(&[
                    (risk_types::PRIVACY, 0.30),
                    (risk_types::MISINFORMATION, 0.25),
                    (risk_types::BIAS, 0.20),
                    (risk_types::USER_EXPERIENCE, 0.15),
                    (risk_types::CONTENT_MODERATION, 0.10),
                ]),
            },
            SourceProfile {
                source: Source::Crowdsourced,
                monthly_rate: 12.0,
                cost_mu: 2.0,
                cost_sigma: 0.6,
                accessibility_alpha: 3.0,
                accessibility_beta: 3.0,
                damage_shape: 2.0,
                damage_scale: crowd_scale,
                damage_model: DamageModel::default(),
                risk_prior: prior(&[
                    (risk_types::PRIVACY, 0.20),
                    (risk_types::MISINFORMATION, 0.20),
                    (risk_types::BIAS, 0.15),
                    (risk_types::SECURITY, 0.15),
                    (risk_types::ETHICAL, 0.15),
                    (risk_types::ROBUSTNESS, 0.15),
                ]),
            },
            SourceProfile {
                source: Source::Expert,
                monthly_rate: 5.0,
                cost_mu: 3.0,
                cost_sigma: 0.7,
                accessibility_alpha: 2.0,
                accessibility_beta: 5.0,
                damage_shape: 1.5,
                damage_scale: expert_scale,
                damage_model: DamageModel::default(),
                risk_prior: prior(&[
                    (risk_types::SECURITY, 0.20),
                    (risk_types::ETHICAL, 0.20),
                    (risk_types::ROBUSTNESS, 0.15),
                    (risk_types::LONG_TERM_SOCIETAL_IMPACT, 0.20),
                    (risk_types::AI_ALIGNMENT, 0.15),
                    (risk_types::INTERPRETABILITY, 0.10),
                ]),
            },
        ]
    }
}

fn prior(weights: &[(&str, f64)]) -> Vec<(RiskType, f64)> {
    weights.iter().map(|&(t, w)| (RiskType::from(t), w)).collect()
}
