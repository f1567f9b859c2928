//! Incident-count projection: Holt linear exponential smoothing plus
//! worst/average/best scenario bands built by scaling the trend component.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ForecastError {
    #[error("series must not be empty")]
    Empty,
    #[error("months must be strictly increasing at position {0}")]
    NonIncreasing(usize),
    #[error("count at position {0} must be finite and non-negative, got {1}")]
    BadCount(usize, f64),
    #[error("series must contain at least 2 points to fit, got {0}")]
    TooShort(usize),
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("beta must lie in [0, 1], got {0}")]
    BadBeta(f64),
}

/// Monthly incident counts as (month index, count), strictly increasing in
/// month. Gaps are allowed; the recurrences treat points as consecutive
/// observations.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidentSeries {
    points: Vec<(i64, f64)>,
}

impl IncidentSeries {
    pub fn new(points: Vec<(i64, f64)>) -> Result<Self, ForecastError> {
        if points.is_empty() {
            return Err(ForecastError::Empty);
        }
        for (i, &(month, count)) in points.iter().enumerate() {
            if i > 0 && month <= points[i - 1].0 {
                return Err(ForecastError::NonIncreasing(i));
            }
            if !(count.is_finite() && count >= 0.0) {
                return Err(ForecastError::BadCount(i, count));
            }
        }
        Ok(IncidentSeries { points })
    }

    pub fn points(&self) -> &[(i64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last_month(&self) -> i64 {
        self.points.last().expect("validated non-empty").0
    }
}

/// Fitted Holt linear-trend state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoltModel {
    pub alpha: f64,
    pub beta: f64,
    /// Smoothed level after the last observation.
    pub level: f64,
    /// Smoothed trend (per month) after the last observation.
    pub trend: f64,
    /// In-sample one-step-ahead errors `y_t − (l_{t−1} + b_{t−1})`, one per
    /// observation after the first.
    pub one_step_errors: Vec<f64>,
    /// Month index of the last observation; projections start after it.
    pub last_month: i64,
}

/// Standard Holt recurrences — level `l_t = α·y_t + (1−α)(l_{t−1}+b_{t−1})`,
/// trend `b_t = β(l_t−l_{t−1}) + (1−β)b_{t−1}` — initialized with
/// `l_1 = y_1`, `b_1 = y_2 − y_1`.
pub fn fit_holt(series: &IncidentSeries, alpha: f64, beta: f64) -> Result<HoltModel, ForecastError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ForecastError::BadAlpha(alpha));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(ForecastError::BadBeta(beta));
    }
    let points = series.points();
    if points.len() < 2 {
        return Err(ForecastError::TooShort(points.len()));
    }

    let mut level = points[0].1;
    let mut trend = points[1].1 - points[0].1;
    let mut one_step_errors = Vec::with_capacity(points.len() - 1);
    for &(_, y) in &points[1..] {
        let forecast = level + trend;
        one_step_errors.push(y - forecast);
        let previous_level = level;
        level = alpha * y + (1.0 - alpha) * forecast;
        trend = beta * (level - previous_level) + (1.0 - beta) * trend;
    }
    Ok(HoltModel {
        alpha,
        beta,
        level,
        trend,
        one_step_errors,
        last_month: series.last_month(),
    })
}

/// Trend multipliers defining the three scenarios. The defaults read the
/// fitted trend as: doubling (unchecked growth), continuing, or reversing
/// at half strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioMultipliers {
    pub worst: f64,
    pub average: f64,
    pub best: f64,
}

impl Default for ScenarioMultipliers {
    fn default() -> Self {
        ScenarioMultipliers {
            worst: 2.0,
            average: 1.0,
            best: -0.5,
        }
    }
}

/// Three forecast series over the same projected months.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioProjection {
    pub months: Vec<i64>,
    pub worst: Vec<f64>,
    pub average: Vec<f64>,
    pub best: Vec<f64>,
}

/// Projects `horizon` months past the last observation: each scenario is
/// `level + h · trend · multiplier`, floored at 0 (incident counts cannot
/// go negative).
pub fn project_scenarios(
    model: &HoltModel,
    horizon: u32,
    multipliers: ScenarioMultipliers,
) -> ScenarioProjection {
    assert!(horizon >= 1, "horizon must be positive");
    let mut projection = ScenarioProjection {
        months: Vec::with_capacity(horizon as usize),
        worst: Vec::new(),
        average: Vec::new(),
        best: Vec::new(),
    };
    for h in 1..=i64::from(horizon) {
        let at = |multiplier: f64| (model.level + h as f64 * model.trend * multiplier).max(0.0);
        projection.months.push(model.last_month + h);
        projection.worst.push(at(multipliers.worst));
        projection.average.push(at(multipliers.average));
        projection.best.push(at(multipliers.best));
    }
    projection
}
