//! Plain-text system and dataset files.
//!
//! Both are small JSON documents. Emission is canonical: emitting a parsed
//! emission reproduces the same bytes. Numbers use the shortest
//! representation that round-trips exactly.
//!
//! System file:
//!
//! ```text
//! {
//!   "name": "syn-000",
//!   "eta": [
//!     [0.9, 0.1],
//!     [0.2, 0.7]
//!   ],
//!   "zeta": [0.4, 0.6],
//!   "class_names": ["a", "b"]
//! }
//! ```
//!
//! `eta` is row-major with row `i` the source class; `class_names` is
//! optional. Dataset file:
//!
//! ```text
//! {
//!   "n_entities": 2,
//!   "cells": [
//!     [0, 1],
//!     [1, 1]
//!   ],
//!   "observed_idx": [0, 3],
//!   "test_idx": [1]
//! }
//! ```
//!
//! `cells` may also be given as one flat row-major list of `n^2` values.
//! Indices are flat row-major cell ids.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::data::RelationData;
use crate::error::{Error, Result};
use crate::system::{ProbMatrix, StoredSystem};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    name: String,
    eta: Vec<Vec<f64>>,
    zeta: Vec<f64>,
    #[serde(default)]
    class_names: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCells {
    Rows(Vec<Vec<u8>>),
    Flat(Vec<u8>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    n_entities: usize,
    cells: RawCells,
    #[serde(default)]
    observed_idx: Vec<usize>,
    #[serde(default)]
    test_idx: Vec<usize>,
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn parse_system(text: &str) -> Result<StoredSystem> {
    let raw: RawSystem = serde_json::from_str(text).map_err(parse_err)?;
    let system = StoredSystem::new(raw.name, ProbMatrix::from_rows(&raw.eta)?, raw.zeta)?;
    match raw.class_names {
        Some(names) => system.with_class_names(names),
        None => Ok(system),
    }
}

fn json_f64(v: f64) -> String {
    serde_json::to_string(&v).expect("finite float")
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

pub fn emit_system(system: &StoredSystem) -> String {
    let m = system.n_classes();
    let mut out = String::from("{\n");
    writeln!(out, "  \"name\": {},", json_str(system.name())).unwrap();
    out.push_str("  \"eta\": [\n");
    for r in 0..m {
        let sep = if r + 1 < m { "," } else { "" };
        writeln!(out, "    [{}]{sep}", join(system.eta().row(r), |v| json_f64(*v))).unwrap();
    }
    out.push_str("  ],\n");
    write!(out, "  \"zeta\": [{}]", join(system.zeta(), |v| json_f64(*v))).unwrap();
    if let Some(names) = system.class_names() {
        write!(out, ",\n  \"class_names\": [{}]", join(names, |s| json_str(s))).unwrap();
    }
    out.push_str("\n}\n");
    out
}

pub fn parse_dataset(text: &str) -> Result<RelationData> {
    let raw: RawDataset = serde_json::from_str(text).map_err(parse_err)?;
    let n = raw.n_entities;
    let cells = match raw.cells {
        RawCells::Flat(c) => c,
        RawCells::Rows(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Dimension(format!("cells are not {n} rows of {n}")));
            }
            rows.concat()
        }
    };
    RelationData::new(n, cells)?.with_split(&raw.observed_idx, &raw.test_idx)
}

pub fn emit_dataset(data: &RelationData) -> String {
    let n = data.n_entities();
    let mut out = String::from("{\n");
    writeln!(out, "  \"n_entities\": {n},").unwrap();
    out.push_str("  \"cells\": [\n");
    for r in 0..n {
        let sep = if r + 1 < n { "," } else { "" };
        let row = &data.cells()[r * n..(r + 1) * n];
        writeln!(out, "    [{}]{sep}", join(row, |v| v.to_string())).unwrap();
    }
    out.push_str("  ],\n");
    writeln!(out, "  \"observed_idx\": [{}],", join(&data.observed_indices(), |v| v.to_string())).unwrap();
    writeln!(out, "  \"test_idx\": [{}]", join(&data.test_indices(), |v| v.to_string())).unwrap();
    out.push_str("}\n");
    out
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_system(path: &Path) -> Result<StoredSystem> {
    parse_system(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_system(path: &Path, system: &StoredSystem) -> Result<()> {
    write(path, &emit_system(system))
}

pub fn read_dataset(path: &Path) -> Result<RelationData> {
    parse_dataset(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_dataset(path: &Path, data: &RelationData) -> Result<()> {
    write(path, &emit_dataset(data))
}

/// Every `*.json` system file in `dir`, ordered by file name.
pub fn read_systems_dir(dir: &Path) -> Result<Vec<StoredSystem>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_system(p)).collect()
}
