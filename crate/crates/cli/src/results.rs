//! Result rows and their CSV form.
//!
//! Header, in order:
//!
//! ```text
//! target,target_index,observed_fraction,fraction_index,model,k,n_test,score,
//! tau,log10_tau,irm_weight,best_system,weights,seconds,seed,error
//! ```
//!
//! `score` is the negative log predictive probability summed over the test
//! cells (lower is better). `weights` holds the posterior weight of every
//! component as a JSON list of `[name, weight]` pairs, the theory component
//! named `irm`. Columns that do not apply to a row are empty; a failed row
//! has an empty `score` and a message in `error`.

use std::path::Path;

use relgen::{Error as ModelError, EPS};
use serde::{Deserialize, Serialize};

use crate::config::ModelKind;
use crate::error::{io_error, HarnessError, Result};

pub const HEADER: [&str; 16] = [
    "target",
    "target_index",
    "observed_fraction",
    "fraction_index",
    "model",
    "k",
    "n_test",
    "score",
    "tau",
    "log10_tau",
    "irm_weight",
    "best_system",
    "weights",
    "seconds",
    "seed",
    "error",
];

/// Name of the theory component in weight lists.
pub const THEORY_COMPONENT: &str = "irm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub target: String,
    pub target_index: usize,
    pub observed_fraction: f64,
    pub fraction_index: usize,
    pub model: ModelKind,
    /// Stored systems in the pool; 0 for the IRM.
    pub k: usize,
    pub n_test: usize,
    pub score: Option<f64>,
    pub tau: Option<f64>,
    pub log10_tau: Option<f64>,
    pub irm_weight: Option<f64>,
    pub best_system: Option<String>,
    #[serde(with = "weights_column")]
    pub weights: Vec<(String, f64)>,
    pub seconds: Option<f64>,
    pub seed: u64,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

mod weights_column {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &[(String, f64)], s: S) -> Result<S::Ok, S::Error> {
        if w.is_empty() {
            s.serialize_str("")
        } else {
            s.serialize_str(&serde_json::to_string(w).map_err(serde::ser::Error::custom)?)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, f64)>, D::Error> {
        let text = String::deserialize(d)?;
        if text.is_empty() {
            Ok(Vec::new())
        } else {
            serde_json::from_str(&text).map_err(D::Error::custom)
        }
    }
}

/// Negative log predictive probability of `truth`, summed over cells.
pub fn evaluate(predictions: &[f64], truth: &[u8]) -> relgen::Result<f64> {
    if predictions.len() != truth.len() {
        return Err(ModelError::Dimension(format!(
            "{} predictions for {} test cells",
            predictions.len(),
            truth.len()
        )));
    }
    let mut score = 0.0;
    for (&p, &v) in predictions.iter().zip(truth) {
        if !(EPS..=1.0 - EPS).contains(&p) {
            return Err(ModelError::Argument(format!("prediction {p} outside [eps, 1 - eps]")));
        }
        score -= match v {
            1 => p.ln(),
            0 => (1.0 - p).ln(),
            _ => return Err(ModelError::Argument(format!("cell value {v} is not binary"))),
        };
    }
    Ok(score)
}

pub fn emit_rows(rows: &[ResultRow]) -> Result<String> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    wtr.write_record(HEADER)?;
    for row in rows {
        wtr.serialize(row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| HarnessError::Table(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output of utf-8 fields is utf-8"))
}

pub fn parse_rows(text: &str) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers()?;
    if header.iter().ne(HEADER) {
        return Err(HarnessError::Table(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    for row in &rows {
        if let Some(score) = row.score {
            if !(score.is_finite() && score >= 0.0) {
                return Err(HarnessError::Table(format!("score {score} is not a finite non-negative value")));
            }
        }
    }
    Ok(rows)
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::write(path, emit_rows(rows)?).map_err(io_error(path))
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    parse_rows(&std::fs::read_to_string(path).map_err(io_error(path))?)
}
