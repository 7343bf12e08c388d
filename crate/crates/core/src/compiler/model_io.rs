//! Compiled-model persistence: a JSON document and a plain upper-triangular
//! matrix listing for external QUBO tools.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AuxRecord, CompileConfig, PenaltyBlock, QuboModel};
use crate::encoding::EncodingPlan;
use crate::expression::{Monomial, Polynomial};

pub const MODEL_SCHEMA: &str = "qubo-forge-model/1";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model schema `{0}`")]
    Schema(String),
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    schema: String,
    variables: Vec<String>,
    offset: f64,
    linear: Vec<(String, f64)>,
    quadratic: Vec<(String, String, f64)>,
    encodings: Vec<EncodingPlan>,
    penalties: Vec<PenaltyBlock>,
    aux_registry: Vec<AuxRecord>,
    cost: Polynomial,
    config: CompileConfig,
}

impl QuboModel {
    /// Linear and pairwise coefficients, in canonical term order.
    pub fn linear_and_pairs(&self) -> (Vec<(String, f64)>, Vec<(String, String, f64)>) {
        let mut linear = Vec::new();
        let mut pairs = Vec::new();
        for (m, c) in self.quadratic.terms() {
            match m.vars() {
                [v] => linear.push((v.clone(), c)),
                [a, b] => pairs.push((a.clone(), b.clone(), c)),
                _ => {}
            }
        }
        (linear, pairs)
    }

    pub fn to_json(&self) -> String {
        let (linear, quadratic) = self.linear_and_pairs();
        let doc = ModelDoc {
            schema: MODEL_SCHEMA.to_string(),
            variables: self.binaries(),
            offset: self.offset,
            linear,
            quadratic,
            encodings: self.encodings.clone(),
            penalties: self.penalties.clone(),
            aux_registry: self.aux_registry.clone(),
            cost: self.cost.clone(),
            config: self.config.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<QuboModel, ModelFileError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(MODEL_SCHEMA) => {}
            other => return Err(ModelFileError::Schema(other.unwrap_or("<missing>").to_string())),
        }
        let doc: ModelDoc = serde_json::from_value(value)?;
        let mut quadratic = Polynomial::zero();
        for (v, c) in doc.linear {
            quadratic.add_term(Monomial::var(v), c);
        }
        for (a, b, c) in doc.quadratic {
            quadratic.add_term(Monomial::from_vars([a, b]), c);
        }
        Ok(QuboModel {
            quadratic,
            offset: doc.offset,
            encodings: doc.encodings,
            penalties: doc.penalties,
            aux_registry: doc.aux_registry,
            cost: doc.cost,
            config: doc.config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelFileError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<QuboModel, ModelFileError> {
        QuboModel::from_json(&std::fs::read_to_string(path)?)
    }

    /// Upper-triangular matrix listing, one `row col value` line per nonzero
    /// entry; linear terms sit on the diagonal. Indices follow
    /// [`QuboModel::binaries`], which is listed in the header.
    pub fn to_matrix_text(&self) -> String {
        let names = self.binaries();
        let index = |n: &str| names.iter().position(|m| m == n).expect("binary owned by model");
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (m, c) in self.quadratic.terms() {
            match m.vars() {
                [v] => entries.push((index(v), index(v), c)),
                [a, b] => {
                    let (i, j) = (index(a), index(b));
                    entries.push((i.min(j), i.max(j), c));
                }
                _ => {}
            }
        }
        entries.sort_by_key(|x| (x.0, x.1));
        let mut out = String::new();
        writeln!(out, "# variables {}", names.len()).unwrap();
        for (k, n) in names.iter().enumerate() {
            writeln!(out, "# {k} {n}").unwrap();
        }
        writeln!(out, "# offset {}", self.offset).unwrap();
        for (i, j, c) in entries {
            writeln!(out, "{i} {j} {c}").unwrap();
        }
        out
    }
}
