//! Reproducibility check: re-execute a report's embedded config and compare.

use serde_json::{Map, Value};
use std::collections::BTreeMap;

use crate::config::ExperimentConfig;
use crate::runner::execute;
use crate::CliError;

pub enum ComparisonMode {
    /// Both runs single-threaded: every numeric field must match bit-exactly.
    Exact,
    /// Parallel rerun: integer counts still match exactly; fields that carry
    /// a recorded standard error may differ within six of them.
    Statistical,
}

impl ComparisonMode {
    pub fn name(&self) -> &'static str {
        match self {
            ComparisonMode::Exact => "exact",
            ComparisonMode::Statistical => "statistical",
        }
    }
}

pub struct CheckOutcome {
    pub mode: &'static str,
    /// Path of the first differing field, if any.
    pub mismatch: Option<String>,
}

pub fn check_report(report: &Value, threads: usize) -> Result<CheckOutcome, CliError> {
    let config_obj = report
        .get("config")
        .and_then(Value::as_object)
        .ok_or_else(|| CliError::Config("report has no config object".into()))?;
    let mut map = BTreeMap::new();
    for (k, v) in config_obj {
        let s = v
            .as_str()
            .ok_or_else(|| CliError::Config(format!("config key '{k}' is not a string")))?;
        map.insert(k.clone(), s.to_string());
    }
    let config = ExperimentConfig::from_map(map)?;
    let rerun = execute(&config)?;

    let recorded_threads = report.get("threads").and_then(Value::as_u64).unwrap_or(1);
    let mode = if recorded_threads == 1 && threads == 1 {
        ComparisonMode::Exact
    } else {
        ComparisonMode::Statistical
    };

    let recorded = report
        .get("results")
        .ok_or_else(|| CliError::Config("report has no results object".into()))?;
    let mismatch = compare(recorded, &rerun.results, &mode, "results");
    Ok(CheckOutcome {
        mode: mode.name(),
        mismatch,
    })
}

/// Standard error recorded next to a field: `foo` pairs with `foo_std_err`,
/// or with a `std_error` sibling inside the same object (measure estimates).
fn sibling_std_error(obj: &Map<String, Value>, key: &str) -> Option<f64> {
    obj.get(&format!("{key}_std_err"))
        .or_else(|| obj.get(&format!("{key}_std_error")))
        .or_else(|| if key == "value" { obj.get("std_error") } else { None })
        .and_then(Value::as_f64)
}

fn compare(a: &Value, b: &Value, mode: &ComparisonMode, path: &str) -> Option<String> {
    match (a, b) {
        (Value::Object(ao), Value::Object(bo)) => {
            if ao.len() != bo.len() {
                return Some(format!("{path}: object size {} vs {}", ao.len(), bo.len()));
            }
            for (k, av) in ao {
                let Some(bv) = bo.get(k) else {
                    return Some(format!("{path}.{k}: missing in rerun"));
                };
                let sub = format!("{path}.{k}");
                // numeric leaves get the statistical allowance here, where the
                // sibling std error is visible
                if let (Some(x), Some(y)) = (av.as_f64(), bv.as_f64()) {
                    if !numbers_match(av, bv, x, y, mode, sibling_std_error(ao, k)) {
                        return Some(format!("{sub}: {x} vs {y}"));
                    }
                    continue;
                }
                if let Some(m) = compare(av, bv, mode, &sub) {
                    return Some(m);
                }
            }
            None
        }
        (Value::Array(aa), Value::Array(ba)) => {
            if aa.len() != ba.len() {
                return Some(format!("{path}: array length {} vs {}", aa.len(), ba.len()));
            }
            for (i, (av, bv)) in aa.iter().zip(ba).enumerate() {
                if let Some(m) = compare(av, bv, mode, &format!("{path}[{i}]")) {
                    return Some(m);
                }
            }
            None
        }
        _ => {
            if let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) {
                if numbers_match(a, b, x, y, mode, None) {
                    return None;
                }
                return Some(format!("{path}: {x} vs {y}"));
            }
            if a == b {
                None
            } else {
                Some(format!("{path}: {a} vs {b}"))
            }
        }
    }
}

fn numbers_match(
    a: &Value,
    b: &Value,
    x: f64,
    y: f64,
    mode: &ComparisonMode,
    std_error: Option<f64>,
) -> bool {
    if a.is_u64() || a.is_i64() || b.is_u64() || b.is_i64() {
        return a == b;
    }
    match mode {
        ComparisonMode::Exact => x.to_bits() == y.to_bits(),
        ComparisonMode::Statistical => {
            if x.to_bits() == y.to_bits() {
                return true;
            }
            match std_error {
                Some(se) => (x - y).abs() <= 6.0 * se + 1e-12,
                None => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0),
            }
        }
    }
}
