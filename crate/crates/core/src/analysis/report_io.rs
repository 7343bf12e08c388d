use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::AnalysisReport;
use crate::expression::round_sig;
use crate::solvers::SolutionSet;

pub const SOLUTION_SCHEMA: &str = "qubo-forge-solution/1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed solution json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported solution schema `{found}` (expected `{SOLUTION_SCHEMA}`)")]
    Schema { found: String },
}

/// Persisted result of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub schema: String,
    pub solution: SolutionSet,
    pub report: AnalysisReport,
    /// Penalty weights the solution was obtained with.
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

impl SolutionReport {
    pub fn new(solution: SolutionSet, report: AnalysisReport, lambdas: Vec<f64>) -> Self {
        SolutionReport { schema: SOLUTION_SCHEMA.to_string(), solution, report, lambdas, trials: None }
    }

    /// JSON text with every non-integral float cut to 12 significant digits.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        round_floats(&mut value);
        serde_json::to_string_pretty(&value).expect("value prints")
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let value: Value = serde_json::from_str(text)?;
        let found = value.get("schema").and_then(Value::as_str).unwrap_or("<missing>");
        if found != SOLUTION_SCHEMA {
            return Err(ReportError::Schema { found: found.to_string() });
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// Rounds every floating-point number in a JSON tree to 12 significant
/// digits. Infinite values have no JSON form and are already `null`.
pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if let Some(r) = serde_json::Number::from_f64(round_sig(x, 12)) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn save_report(path: &Path, report: &SolutionReport) -> Result<(), ReportError> {
    std::fs::write(path, report.to_json())?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<SolutionReport, ReportError> {
    SolutionReport::from_json(&std::fs::read_to_string(path)?)
}
