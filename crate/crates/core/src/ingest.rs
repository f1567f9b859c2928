//! Replay of toxicity-annotated conversation corpora.
//!
//! Records arrive as delimited text (header row) or JSON-lines carrying
//! per-category toxicity scores. Each record maps to a [`Report`]: cost from
//! total toxicity, accessibility from dialogue length, damage from the peak
//! category score, risk type from threshold rules. The mapped reports are
//! bucketed into calendar months and replayed through the engine in drain
//! mode.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{SimulationConfig, Violation};
use crate::engine::{run_replay, EngineError, SimulationResult};
use crate::report::{risk_types, Report, RiskType, Source};

/// The score categories every record must carry.
pub const CATEGORIES: [&str; 7] = [
    "toxicity",
    "severe_toxicity",
    "obscene",
    "identity_attack",
    "insult",
    "threat",
    "sexual_explicit",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("input is not valid UTF-8: {0}")]
    Encoding(String),
    #[error("missing required column '{0}'")]
    Schema(String),
    #[error("line {line}, field '{field}': {message}")]
    Row {
        line: u64,
        field: String,
        message: String,
    },
    #[error("invalid mapping config: {0}")]
    Mapping(String),
    #[error("replay needs at least one record")]
    EmptyCorpus,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// One parsed corpus record.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRecord {
    pub record_id: String,
    /// Missing timestamps are allowed; such records land in month 0.
    pub timestamp: Option<DateTime<Utc>>,
    pub dialogue_turns: u32,
    /// Category → score in [0, 1], keyed by the canonical [`CATEGORIES`]
    /// names regardless of the input column names.
    pub scores: BTreeMap<String, f64>,
}

/// Column/field naming. Only overrides need listing: any canonical name
/// absent from `categories` is looked up under its own name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecordSchema {
    pub record_id: String,
    pub timestamp: String,
    pub turns: String,
    /// Canonical category name → input column name.
    pub categories: BTreeMap<String, String>,
}

impl Default for RecordSchema {
    fn default() -> Self {
        RecordSchema {
            record_id: "record_id".into(),
            timestamp: "timestamp".into(),
            turns: "turns".into(),
            categories: BTreeMap::new(),
        }
    }
}

impl RecordSchema {
    fn column_for<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.categories.get(canonical).map_or(canonical, String::as_str)
    }
}

/// Parses a corpus from delimited text (header row) or JSON-lines; the
/// format is sniffed from the first non-whitespace byte (`{` means JSONL).
/// Records come back in input order. Empty input is an empty corpus, not an
/// error.
pub fn parse_records(input: impl Read, schema: &RecordSchema) -> Result<Vec<ReplayRecord>, IngestError> {
    let mut bytes = Vec::new();
    let mut input = input;
    input.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| IngestError::Encoding(e.to_string()))?;
    let Some(first) = text.chars().find(|c| !c.is_whitespace()) else {
        return Ok(Vec::new());
    };
    if first == '{' {
        parse_jsonl(text, schema)
    } else {
        parse_csv(text, schema)
    }
}

fn parse_csv(text: &str, schema: &RecordSchema) -> Result<Vec<ReplayRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let id_col = find(&schema.record_id).ok_or_else(|| IngestError::Schema(schema.record_id.clone()))?;
    let turns_col = find(&schema.turns).ok_or_else(|| IngestError::Schema(schema.turns.clone()))?;
    let timestamp_col = find(&schema.timestamp); // optional
    let mut score_cols = Vec::with_capacity(CATEGORIES.len());
    for canonical in CATEGORIES {
        let column = schema.column_for(canonical);
        let idx = find(column).ok_or_else(|| IngestError::Schema(column.to_string()))?;
        score_cols.push((canonical, idx));
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |idx: usize| row.get(idx).unwrap_or("");

        let timestamp = match timestamp_col.map(field) {
            None | Some("") => None,
            Some(raw) => Some(parse_timestamp(raw).map_err(|message| IngestError::Row {
                line,
                field: schema.timestamp.clone(),
                message,
            })?),
        };
        let dialogue_turns = parse_turns(field(turns_col)).map_err(|message| IngestError::Row {
            line,
            field: schema.turns.clone(),
            message,
        })?;
        let mut scores = BTreeMap::new();
        for &(canonical, idx) in &score_cols {
            let value = parse_score(field(idx)).map_err(|message| IngestError::Row {
                line,
                field: schema.column_for(canonical).to_string(),
                message,
            })?;
            scores.insert(canonical.to_string(), value);
        }
        records.push(ReplayRecord {
            record_id: field(id_col).to_string(),
            timestamp,
            dialogue_turns,
            scores,
        });
    }
    Ok(records)
}

fn parse_jsonl(text: &str, schema: &RecordSchema) -> Result<Vec<ReplayRecord>, IngestError> {
    let mut records = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i as u64 + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(raw_line).map_err(|e| IngestError::Row {
                line,
                field: "(record)".into(),
                message: e.to_string(),
            })?;
        let row_error = |field: &str, message: String| IngestError::Row {
            line,
            field: field.to_string(),
            message,
        };

        let record_id = match value.get(schema.record_id.as_str()) {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(other) => other.to_string(),
            None => return Err(IngestError::Schema(schema.record_id.clone())),
        };
        let timestamp = match value.get(schema.timestamp.as_str()) {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(raw)) if raw.is_empty() => None,
            Some(serde_json::Value::String(raw)) => {
                Some(parse_timestamp(raw).map_err(|m| row_error(&schema.timestamp, m))?)
            }
            Some(other) => {
                return Err(row_error(&schema.timestamp, format!("expected string, got {other}")))
            }
        };
        let dialogue_turns = match value.get(schema.turns.as_str()) {
            Some(serde_json::Value::Number(n)) => parse_turns(&n.to_string()),
            Some(serde_json::Value::String(s)) => parse_turns(s),
            Some(other) => Err(format!("expected number, got {other}")),
            None => return Err(IngestError::Schema(schema.turns.clone())),
        }
        .map_err(|m| row_error(&schema.turns, m))?;

        let mut scores = BTreeMap::new();
        for canonical in CATEGORIES {
            let field_name = schema.column_for(canonical);
            let raw = match value.get(field_name) {
                Some(serde_json::Value::Number(n)) => n.to_string(),
                Some(other) => {
                    return Err(row_error(field_name, format!("expected number, got {other}")))
                }
                None => return Err(IngestError::Schema(field_name.to_string())),
            };
            let score = parse_score(&raw).map_err(|m| row_error(field_name, m))?;
            scores.insert(canonical.to_string(), score);
        }
        records.push(ReplayRecord {
            record_id,
            timestamp,
            dialogue_turns,
            scores,
        });
    }
    Ok(records)
}

fn parse_turns(raw: &str) -> Result<u32, String> {
    let turns: u32 = raw.trim().parse().map_err(|e| format!("{e}: '{raw}'"))?;
    if turns == 0 {
        return Err("dialogue_turns must be at least 1".into());
    }
    Ok(turns)
}

fn parse_score(raw: &str) -> Result<f64, String> {
    let score: f64 = raw.trim().parse().map_err(|e| format!("{e}: '{raw}'"))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("score {score} outside [0, 1]"));
    }
    Ok(score)
}

fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Ok(dt.with_timezone(&Utc));
    }
    for format in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, format) {
            return Ok(Utc.from_utc_datetime(&naive));
        }
    }
    if let Ok(date) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Ok(Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("midnight is valid")));
    }
    Err(format!("unrecognized timestamp '{raw}'"))
}

/// One classification rule: category score strictly above the threshold
/// assigns the risk type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub category: String,
    pub threshold: f64,
    pub risk_type: RiskType,
}

/// How records become reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MappingConfig {
    /// Cost scale κ_s: supervision_cost = max(1, κ_s · Σ scores).
    pub kappa_s: f64,
    /// Damage scale κ_d: potential_damage = κ_d · max score.
    pub kappa_d: f64,
    /// Accessibility cap: accessibility = min(1, turns / dt_max).
    pub dt_max: f64,
    /// Ordered rules; the first match wins.
    pub threshold_rules: Vec<ThresholdRule>,
    pub default_risk_type: RiskType,
}

impl Default for MappingConfig {
    fn default() -> Self {
        let rule = |category: &str, threshold: f64, risk_type: &str| ThresholdRule {
            category: category.into(),
            threshold,
            risk_type: risk_type.into(),
        };
        MappingConfig {
            kappa_s: 5.0,
            kappa_d: 500.0,
            dt_max: 10.0,
            threshold_rules: vec![
                rule("threat", 0.5, risk_types::SECURITY),
                rule("severe_toxicity", 0.7, risk_types::SECURITY),
                rule("sexual_explicit", 0.5, risk_types::COMPLIANCE_AND_LEGAL),
                rule("identity_attack", 0.5, risk_types::BIAS_AND_FAIRNESS),
                rule("insult", 0.5, risk_types::BIAS_AND_FAIRNESS),
            ],
            default_risk_type: risk_types::CONTENT_MODERATION.into(),
        }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut check = |field: &str, ok: bool, message: String| {
            if !ok {
                violations.push(Violation {
                    field: format!("mapping.{field}"),
                    message,
                });
            }
        };
        for (field, value) in [("kappa_s", self.kappa_s), ("kappa_d", self.kappa_d)] {
            check(field, value.is_finite() && value > 0.0, format!("must be finite and positive, got {value}"));
        }
        check(
            "dt_max",
            self.dt_max.is_finite() && self.dt_max >= 1.0,
            format!("must be at least 1, got {}", self.dt_max),
        );
        for (i, rule) in self.threshold_rules.iter().enumerate() {
            check(
                &format!("threshold_rules[{i}]"),
                rule.threshold > 0.0 && rule.threshold <= 1.0,
                format!("threshold must lie in (0, 1], got {}", rule.threshold),
            );
        }
        violations
    }
}

/// First matching rule wins; no match falls through to the default type.
pub fn classify_risk(
    scores: &BTreeMap<String, f64>,
    rules: &[ThresholdRule],
    default_risk_type: &RiskType,
) -> RiskType {
    for rule in rules {
        let score = scores.get(&rule.category).copied().unwrap_or(0.0);
        if score > rule.threshold {
            return rule.risk_type.clone();
        }
    }
    default_risk_type.clone()
}

/// Maps one record to a report arriving in `month`. Cost rides the total
/// toxicity (floored at 1 so every report costs something to review),
/// accessibility the dialogue length, damage the single worst category.
pub fn map_record(
    record: &ReplayRecord,
    config: &MappingConfig,
    month: u32,
    id: u64,
) -> Result<Report, IngestError> {
    let total: f64 = record.scores.values().sum();
    let peak = record.scores.values().copied().fold(0.0, f64::max);
    let supervision_cost = (config.kappa_s * total).max(1.0);
    let accessibility = (f64::from(record.dialogue_turns) / config.dt_max).min(1.0);
    let potential_damage = config.kappa_d * peak;
    let risk_type = classify_risk(&record.scores, &config.threshold_rules, &config.default_risk_type);
    Report::new(
        id,
        month,
        Source::Community,
        risk_type,
        supervision_cost,
        accessibility,
        potential_damage,
    )
    .map_err(|e| IngestError::Mapping(e.to_string()))
}

/// Buckets records into calendar months (UTC) relative to the earliest
/// timestamped record and maps each to a report. Records without timestamps
/// land in month 0. Ids follow input order, so row `k` of the corpus is
/// report id `k`.
pub fn map_corpus(
    records: &[ReplayRecord],
    config: &MappingConfig,
) -> Result<Vec<Vec<Report>>, IngestError> {
    let violations = config.validate();
    if !violations.is_empty() {
        let joined: Vec<String> = violations.iter().map(|v| format!("{}: {}", v.field, v.message)).collect();
        return Err(IngestError::Mapping(joined.join("; ")));
    }
    let month_index = |ts: &DateTime<Utc>| ts.year() * 12 + ts.month0() as i32;
    let origin = records
        .iter()
        .filter_map(|r| r.timestamp.as_ref().map(month_index))
        .min();
    let bucket_of = |record: &ReplayRecord| -> u32 {
        match (&record.timestamp, origin) {
            (Some(ts), Some(origin)) => (month_index(ts) - origin) as u32,
            _ => 0,
        }
    };
    let last_month = records.iter().map(bucket_of).max().unwrap_or(0);
    let mut batches: Vec<Vec<Report>> = vec![Vec::new(); last_month as usize + 1];
    for (id, record) in records.iter().enumerate() {
        let month = bucket_of(record);
        batches[month as usize].push(map_record(record, config, month, id as u64)?);
    }
    Ok(batches)
}

/// Full corpus replay: map, bucket, then run the engine in drain mode so
/// every report is eventually processed. The config supplies the policy,
/// observation window and capacity fraction; the horizon stretches to cover
/// the corpus.
pub fn replay(
    records: &[ReplayRecord],
    mapping: &MappingConfig,
    config: &SimulationConfig,
) -> Result<SimulationResult, IngestError> {
    if records.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    let batches = map_corpus(records, mapping)?;
    let mut config = config.clone();
    config.duration_months = (batches.len() as u32).max(config.observation_months + 1);
    Ok(run_replay(&config, batches)?)
}
