use std::collections::BTreeSet;

use fqcircle_core::CyclotomicSum;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Version tag of the threshold formulas used by `bounds` and `fujita`.
pub const THRESHOLD_VERSION: &str = "thresholds-v1";

#[derive(Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub subcommand: String,
    pub seed: u64,
    pub threshold_version: &'static str,
    pub config: Value,
    pub records: Vec<Value>,
    pub summary: Summary,
}

#[derive(Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub verdicts: usize,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

impl Summary {
    /// Counts records whose `verdict` is a boolean; `null` marks informational rows.
    pub fn of(records: &[Value]) -> Self {
        let verdicts: Vec<bool> = records.iter().filter_map(|r| r.get("verdict").and_then(Value::as_bool)).collect();
        let passed = verdicts.iter().filter(|&&v| v).count();
        let failed = verdicts.len() - passed;
        Summary { records: records.len(), verdicts: verdicts.len(), passed, failed, pass: failed == 0 }
    }
}

/// An unsigned count as a JSON number, or a decimal string past `u64`.
pub fn big(v: u128) -> Value {
    match u64::try_from(v) {
        Ok(x) => Value::from(x),
        Err(_) => Value::from(v.to_string()),
    }
}

fn big_signed(v: i128) -> Value {
    match i64::try_from(v) {
        Ok(x) => Value::from(x),
        Err(_) => Value::from(v.to_string()),
    }
}

/// Integer coordinates in `1, ζ, …, ζ^{p−2}` and `|σ_j(s)|` for `j = 1..p−1`.
pub fn cyclo_json(s: &CyclotomicSum) -> Value {
    let coords: Vec<Value> = s.coords().iter().map(|&c| big_signed(c)).collect();
    let abs: Vec<f64> = (1..s.p()).map(|j| s.embedding_abs2(j).sqrt()).collect();
    serde_json::json!({ "p": s.p(), "coords": coords, "abs": abs })
}

pub fn to_json(report: &Report) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Bool(b)) => b.to_string(),
        Some(Value::Number(n)) => n.to_string(),
        Some(other) => other.to_string(),
    }
}

/// One row per record. Columns are the report identity, `kind`, `verdict`,
/// then the union of record keys in sorted order; nested values are JSON text.
pub fn to_csv(report: &Report) -> Result<String, CliError> {
    const LEAD: [&str; 2] = ["kind", "verdict"];
    let empty = Map::new();
    let keys: BTreeSet<&str> = report
        .records
        .iter()
        .flat_map(|r| r.as_object().unwrap_or(&empty).keys().map(String::as_str))
        .filter(|k| !LEAD.contains(k))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["experiment", "subcommand", "seed", "threshold_version"];
    header.extend(LEAD);
    header.extend(keys.iter().copied());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(&header).map_err(err)?;
    let seed = report.seed.to_string();
    for r in &report.records {
        let mut row = vec![report.experiment.clone(), report.subcommand.clone(), seed.clone(), report.threshold_version.to_string()];
        row.extend(LEAD.iter().chain(keys.iter()).map(|k| cell(r.get(*k))));
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}
