//! File emission: significant-digit number formatting, CSV and JSON
//! payload builders, and the checksummed run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use supervisim_core::report::Source;
use supervisim_core::{BatchSummary, Report, SimulationResult};

use crate::CliError;

/// Plain-decimal rendering with six significant digits (more to the left
/// of the point when the magnitude needs them).
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0.000000".into();
    }
    let decimals = (5 - x.abs().log10().floor() as i64).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Rounds to the serialized precision, so JSON carries the same digits as
/// the CSVs.
pub fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().expect("fmt_sig output is a plain decimal")
}

fn opt_sig(x: Option<f64>) -> serde_json::Value {
    x.map_or(serde_json::Value::Null, |v| json!(round_sig(v)))
}

fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("in-memory JSON serializes");
    bytes.push(b'\n');
    bytes
}

// ── Output directory with manifest bookkeeping ──────────────────────────

#[derive(Serialize)]
struct FileRecord {
    name: String,
    bytes: u64,
    sha256: String,
}

/// Writes files under one output directory and records name, size and
/// checksum of everything written for the closing manifest.
pub struct Emitter {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| {
            CliError::Io(format!("cannot create output directory {}: {e}", dir.display()))
        })?;
        Ok(Emitter { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        let sha256 = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.files.push(FileRecord {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256,
        });
        Ok(())
    }

    /// Writes `manifest_<stamp>.json` listing every file emitted so far
    /// (the manifest cannot checksum itself and is not listed). Returns
    /// the total number of files on disk, manifest included.
    pub fn finish(
        self,
        command: &str,
        config_path: Option<&Path>,
        seed: Option<u64>,
        stamp: &str,
    ) -> Result<usize, CliError> {
        let manifest = json!({
            "command": command,
            "config": config_path.map(|p| p.display().to_string()),
            "seed": seed,
            "out_dir": self.dir.display().to_string(),
            "stamp": stamp,
            "files": self.files,
        });
        let path = self.dir.join(format!("manifest_{stamp}.json"));
        fs::write(&path, json_bytes(&manifest))
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(self.files.len() + 1)
    }
}

// ── CSV payloads ─────────────────────────────────────────────────────────

fn csv_bytes(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    build(&mut writer).map_err(|e| CliError::Io(format!("cannot serialize CSV: {e}")))?;
    writer
        .into_inner()
        .map_err(|e| CliError::Io(format!("cannot serialize CSV: {e}")))
}

/// Report-level CSV: processed reports ordered by (processed_month, id),
/// then the unprocessed remainder by id.
pub fn report_csv(result: &SimulationResult) -> Result<Vec<u8>, CliError> {
    let mut rows: Vec<&Report> = result.reports.iter().collect();
    rows.sort_by_key(|r| (r.processed_month.unwrap_or(u32::MAX), r.id));
    csv_bytes(|w| {
        w.write_record([
            "report_id",
            "arrival_month",
            "processed_month",
            "source",
            "risk_type",
            "supervision_cost",
            "accessibility",
            "potential_damage",
            "priority",
        ])?;
        for r in rows {
            w.write_record([
                r.id.to_string(),
                r.arrival_month.to_string(),
                r.processed_month.map(|m| m.to_string()).unwrap_or_default(),
                r.source.label().to_string(),
                r.risk_type.to_string(),
                fmt_sig(r.supervision_cost),
                fmt_sig(r.accessibility),
                fmt_sig(r.potential_damage),
                fmt_sig(r.priority),
            ])?;
        }
        Ok(())
    })
}

/// Month-by-month metrics CSV; feedback columns (incentives per source,
/// occurrence per risk type) appear only when the loop was enabled.
pub fn monthly_csv(result: &SimulationResult) -> Result<Vec<u8>, CliError> {
    let feedback = result.feedback.as_deref();
    let occurrence_types: Vec<String> = feedback
        .and_then(|s| s.first())
        .map(|st| st.occurrence.keys().map(|t| t.to_string()).collect())
        .unwrap_or_default();
    csv_bytes(|w| {
        let mut header: Vec<String> = [
            "month",
            "arrivals_community",
            "arrivals_crowdsourced",
            "arrivals_expert",
            "processed_community",
            "processed_crowdsourced",
            "processed_expert",
            "processed_total",
            "backlog_size",
            "capacity",
            "capacity_used",
            "mean_cost",
            "mean_accessibility",
            "mean_damage",
            "mean_priority",
            "damage_mitigated",
        ]
        .map(str::to_string)
        .to_vec();
        if feedback.is_some() {
            header.extend(Source::ALL.map(|s| format!("I_{s}")));
            header.extend(occurrence_types.iter().map(|t| format!("O_{t}")));
        }
        w.write_record(&header)?;
        for (i, m) in result.metrics.iter().enumerate() {
            let mut row = vec![
                m.month.to_string(),
                m.arrivals_by_source[Source::Community].to_string(),
                m.arrivals_by_source[Source::Crowdsourced].to_string(),
                m.arrivals_by_source[Source::Expert].to_string(),
                m.processed_by_source[Source::Community].to_string(),
                m.processed_by_source[Source::Crowdsourced].to_string(),
                m.processed_by_source[Source::Expert].to_string(),
                m.processed_total().to_string(),
                m.backlog_size.to_string(),
                m.capacity.map(fmt_sig).unwrap_or_default(),
                fmt_sig(m.capacity_used),
                m.mean_cost.map(fmt_sig).unwrap_or_default(),
                m.mean_accessibility.map(fmt_sig).unwrap_or_default(),
                m.mean_damage.map(fmt_sig).unwrap_or_default(),
                m.mean_priority.map(fmt_sig).unwrap_or_default(),
                fmt_sig(m.damage_mitigated),
            ];
            if let Some(states) = feedback {
                let state = &states[i];
                row.extend(Source::ALL.map(|s| fmt_sig(state.incentives[s])));
                row.extend(state.occurrence.values().map(|&o| fmt_sig(o)));
            }
            w.write_record(&row)?;
        }
        Ok(())
    })
}

// ── JSON payloads ────────────────────────────────────────────────────────

fn mean_of(reports: &[&Report], f: impl Fn(&Report) -> f64) -> Option<f64> {
    if reports.is_empty() {
        return None;
    }
    Some(reports.iter().map(|r| f(r)).sum::<f64>() / reports.len() as f64)
}

fn share_map<K: ToString>(counts: impl IntoIterator<Item = (K, u32)>, total: usize) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> = counts
        .into_iter()
        .map(|(k, n)| {
            let share = if total == 0 { 0.0 } else { f64::from(n) / total as f64 };
            (k.to_string(), json!(round_sig(share)))
        })
        .collect();
    serde_json::Value::Object(map)
}

/// Single-run summary: configuration echo, totals and processed-report
/// means, with every float rounded to the serialized precision.
pub fn run_summary_json(command: &str, result: &SimulationResult) -> Vec<u8> {
    let processed: Vec<&Report> = result.processed_reports().collect();
    let total = processed.len();
    let mut by_source = [(Source::Community, 0u32), (Source::Crowdsourced, 0), (Source::Expert, 0)];
    let mut by_type = std::collections::BTreeMap::<String, u32>::new();
    for r in &processed {
        by_source[r.source as usize].1 += 1;
        *by_type.entry(r.risk_type.to_string()).or_insert(0) += 1;
    }
    let feedback_final = result.feedback.as_deref().and_then(|s| s.last()).map(|state| {
        json!({
            "incentives": serde_json::Value::Object(
                Source::ALL
                    .iter()
                    .map(|&s| (s.to_string(), json!(round_sig(state.incentives[s]))))
                    .collect(),
            ),
            "occurrence": serde_json::Value::Object(
                state
                    .occurrence
                    .iter()
                    .map(|(t, &o)| (t.to_string(), json!(round_sig(o))))
                    .collect(),
            ),
        })
    });
    json_bytes(&json!({
        "command": command,
        "policy": result.config.policy.name(),
        "seed": result.config.master_seed,
        "run_index": result.run_index,
        "duration_months": result.config.duration_months,
        "observation_months": result.config.observation_months,
        "capacity": round_sig(result.capacity),
        "drain_months": result.drain_months,
        "drain_cap_hit": result.drain_cap_hit,
        "generated": result.reports.len(),
        "processed": total,
        "final_backlog": result.final_backlog(),
        "mean_supervision_cost": opt_sig(mean_of(&processed, |r| r.supervision_cost)),
        "mean_accessibility": opt_sig(mean_of(&processed, |r| r.accessibility)),
        "mean_potential_damage": opt_sig(mean_of(&processed, |r| r.potential_damage)),
        "mean_priority": opt_sig(mean_of(&processed, |r| r.priority)),
        "source_shares": share_map(by_source, total),
        "risk_type_shares": share_map(by_type, total),
        "feedback_final": feedback_final,
    }))
}

/// Aggregate summary for a batch invocation, one entry per policy run.
pub fn batch_summary_json(seed: u64, runs: u32, drain: bool, summaries: &[BatchSummary]) -> Vec<u8> {
    let policies: Vec<serde_json::Value> = summaries
        .iter()
        .map(|s| {
            json!({
                "policy": s.policy.name(),
                "n_runs": s.n_runs,
                "total_generated": s.total_generated,
                "total_processed": s.total_processed,
                "mean_supervision_cost": opt_sig(s.mean_cost),
                "mean_accessibility": opt_sig(s.mean_accessibility),
                "mean_potential_damage": opt_sig(s.mean_damage),
                "mean_priority": opt_sig(s.mean_priority),
                "source_shares": serde_json::Value::Object(
                    Source::ALL
                        .iter()
                        .map(|&src| (src.to_string(), json!(round_sig(s.source_shares[src]))))
                        .collect(),
                ),
                "risk_type_shares": serde_json::Value::Object(
                    s.risk_type_shares
                        .iter()
                        .map(|(t, &v)| (t.to_string(), json!(round_sig(v))))
                        .collect(),
                ),
                "mean_backlog_by_month": s
                    .mean_backlog_by_month
                    .iter()
                    .map(|&b| round_sig(b))
                    .collect::<Vec<f64>>(),
            })
        })
        .collect();
    json_bytes(&json!({
        "command": "batch",
        "seed": seed,
        "runs": runs,
        "drain": drain,
        "policies": policies,
    }))
}

// ── Forecast payloads ────────────────────────────────────────────────────

/// `month,worst,average,best` rows, months pre-rendered by the caller.
pub fn forecast_csv(rows: &[(String, f64, f64, f64)]) -> Result<Vec<u8>, CliError> {
    csv_bytes(|w| {
        w.write_record(["month", "worst", "average", "best"])?;
        for (month, worst, average, best) in rows {
            w.write_record([month.clone(), fmt_sig(*worst), fmt_sig(*average), fmt_sig(*best)])?;
        }
        Ok(())
    })
}
