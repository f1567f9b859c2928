//! Seedable Monte-Carlo simulation of AI risk-report supervision.
//!
//! Reports arrive monthly from three sources (community, crowdsourced,
//! expert), each with its own volume and attribute distributions. After an
//! observation window fixes the monthly processing capacity, one of four
//! budget-constrained policies decides which pending reports get processed
//! each month. Optional feedback loops couple processing outcomes back into
//! reporting incentives and risk-type prevalence.
//!
//! The crate also ships a replay path (mapping annotated conversation corpora
//! into reports and running them through the same engine) and a Holt
//! linear-trend forecaster for incident count series.
//!
//! Everything is deterministic given the master seed: every random draw comes
//! from a named [`rng::RngStream`] derived from (seed, run index, label).

pub mod config;
pub mod engine;
pub mod feedback;
pub mod forecast;
pub mod genesis;
pub mod ingest;
pub mod metrics;
pub mod policies;
pub mod profile;
pub mod report;
pub mod rng;

pub use config::{ConfigError, Policy, SimulationConfig, Violation};
pub use engine::{
    run_batch, run_replay, run_simulation, BatchResult, BatchSummary, EngineError,
    SimulationResult,
};
pub use feedback::{FeedbackConfig, FeedbackState};
pub use metrics::{MonthlyMetrics, SourceMap};
pub use profile::{DamageModel, DistributionPreset, SourceProfile};
pub use report::{priority_score, Report, RiskType, Source};
pub use rng::RngStream;
