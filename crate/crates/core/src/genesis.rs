//! Stochastic generation of monthly report batches.
//!
//! Each source draws its monthly arrival count from a Poisson process, then
//! samples per-report attributes: log-normal supervision cost, Beta
//! accessibility, Pareto-family potential damage and a categorical risk type.
//! All draws come from an explicit RNG handed in by the caller; the functions
//! themselves hold no state.

use rand::distr::OpenClosed01;
use rand::Rng;
use rand_distr::{Beta, Distribution, LogNormal, Poisson};
use thiserror::Error;

use crate::profile::{DamageModel, SourceProfile};
use crate::report::{AttributeError, Report, RiskType};

/// Tolerance on the total prior mass accepted by [`assign_risk_type`].
/// Config validation renormalizes to well within this.
const PRIOR_MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenesisError {
    #[error("invalid distribution parameters: {0}")]
    Distribution(String),
    #[error("invalid risk prior: {0}")]
    InvalidPrior(String),
    #[error(transparent)]
    Attribute(#[from] AttributeError),
}

/// Number of reports arriving from `profile`'s source in one month:
/// a Poisson(λ) draw, degenerating to constant 0 when λ = 0.
pub fn sample_monthly_arrivals(profile: &SourceProfile, rng: &mut impl Rng) -> u32 {
    if profile.monthly_rate == 0.0 {
        return 0;
    }
    let poisson = Poisson::new(profile.monthly_rate)
        .expect("validated profile has finite positive rate");
    poisson.sample(rng) as u32
}

/// Samples one report arriving in `month`. Attributes are drawn in a fixed
/// order (cost, accessibility, damage, risk type) so equal seeds reproduce
/// equal reports.
pub fn sample_report(
    profile: &SourceProfile,
    month: u32,
    id: u64,
    rng: &mut impl Rng,
) -> Result<Report, GenesisError> {
    let cost_dist = LogNormal::new(profile.cost_mu, profile.cost_sigma)
        .map_err(|e| GenesisError::Distribution(format!("cost: {e}")))?;
    let acc_dist = Beta::new(profile.accessibility_alpha, profile.accessibility_beta)
        .map_err(|e| GenesisError::Distribution(format!("accessibility: {e}")))?;

    let supervision_cost = cost_dist.sample(rng);
    let accessibility = acc_dist.sample(rng);
    let potential_damage = sample_damage(profile, rng)?;
    let risk_type = assign_risk_type(&profile.risk_prior, rng)?;

    Ok(Report::new(
        id,
        month,
        profile.source,
        risk_type,
        supervision_cost,
        accessibility,
        potential_damage,
    )?)
}

/// Inverse-CDF Pareto-family draw. `U ∈ (0, 1]`, so `U^(-1/shape) ≥ 1`
/// exactly: the floored variant never dips below `scale`, and U = 1 lands
/// precisely on the support edge (`scale`, or 0 for the shifted variant).
fn sample_damage(profile: &SourceProfile, rng: &mut impl Rng) -> Result<f64, GenesisError> {
    if !(profile.damage_shape > 0.0 && profile.damage_scale > 0.0) {
        return Err(GenesisError::Distribution(format!(
            "damage: shape {} / scale {} must be positive",
            profile.damage_shape, profile.damage_scale
        )));
    }
    let u: f64 = rng.sample(OpenClosed01);
    let tail = u.powf(-1.0 / profile.damage_shape);
    Ok(match profile.damage_model {
        DamageModel::Shifted => profile.damage_scale * (tail - 1.0),
        DamageModel::Floored => profile.damage_scale * tail,
    })
}

/// Categorical draw from a risk-type prior. Weights must be non-negative and
/// sum to 1 (within floating-point slack); zero-weight entries are never
/// selected.
pub fn assign_risk_type(
    prior: &[(RiskType, f64)],
    rng: &mut impl Rng,
) -> Result<RiskType, GenesisError> {
    if prior.is_empty() {
        return Err(GenesisError::InvalidPrior("empty".into()));
    }
    if let Some((t, w)) = prior.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
        return Err(GenesisError::InvalidPrior(format!(
            "weight for {t} must be finite and non-negative, got {w}"
        )));
    }
    let total: f64 = prior.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > PRIOR_MASS_TOLERANCE {
        return Err(GenesisError::InvalidPrior(format!(
            "weights sum to {total}, expected 1"
        )));
    }

    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (risk_type, weight) in prior {
        cumulative += weight;
        if u < cumulative {
            return Ok(risk_type.clone());
        }
    }
    // Floating-point residue pushed u past the final cumulative sum; fall
    // back to the last entry that actually carries mass.
    Ok(prior
        .iter()
        .rev()
        .find(|(_, w)| *w > 0.0)
        .map(|(t, _)| t.clone())
        .expect("prior sums to 1, so some weight is positive"))
}

/// Draws one month's batch for a source: the arrival count, then that many
/// reports with consecutive ids starting at `*next_id`.
pub fn sample_monthly_batch(
    profile: &SourceProfile,
    month: u32,
    next_id: &mut u64,
    rng: &mut impl Rng,
) -> Result<Vec<Report>, GenesisError> {
    let count = sample_monthly_arrivals(profile, rng);
    let mut batch = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let report = sample_report(profile, month, *next_id, rng)?;
        *next_id += 1;
        batch.push(report);
    }
    Ok(batch)
}
