//! Aggregation of result rows by (model, K, observed fraction).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ModelKind;
use crate::error::{io_error, HarnessError, Result};
use crate::results::ResultRow;

/// One group of rows. Means are over rows without errors and are empty when
/// the group has none; `rows` counts every row in the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub k: usize,
    pub observed_fraction: f64,
    pub rows: usize,
    pub failed: usize,
    pub mean_score: Option<f64>,
    pub mean_irm_weight: Option<f64>,
    pub mean_log10_tau: Option<f64>,
}

#[derive(Default)]
struct Acc {
    rows: usize,
    failed: usize,
    scores: Vec<f64>,
    irm_weights: Vec<f64>,
    log10_taus: Vec<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Groups `rows` by (model, K, fraction), ordered by model, then K, then
/// fraction. With `exclude_smallest_partition`, rows at the smallest observed
/// fraction present are dropped first.
pub fn summarize(rows: &[ResultRow], exclude_smallest_partition: bool) -> Result<Vec<SummaryRow>> {
    let smallest = rows
        .iter()
        .map(|r| r.observed_fraction)
        .min_by(f64::total_cmp)
        .ok_or(HarnessError::EmptyInput)?;
    let mut groups: BTreeMap<(ModelKind, usize, u64), Acc> = BTreeMap::new();
    for row in rows {
        if exclude_smallest_partition && row.observed_fraction == smallest {
            continue;
        }
        if !(row.observed_fraction >= 0.0) {
            return Err(HarnessError::Table(format!(
                "observed fraction {} is not a proportion",
                row.observed_fraction
            )));
        }
        // bit patterns of non-negative floats sort like the floats
        let acc = groups
            .entry((row.model, row.k, row.observed_fraction.to_bits()))
            .or_default();
        acc.rows += 1;
        match (row.is_error(), row.score) {
            (false, Some(score)) => {
                acc.scores.push(score);
                acc.irm_weights.extend(row.irm_weight);
                acc.log10_taus.extend(row.log10_tau);
            }
            _ => acc.failed += 1,
        }
    }
    if groups.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    Ok(groups
        .into_iter()
        .map(|((model, k, bits), acc)| SummaryRow {
            model,
            k,
            observed_fraction: f64::from_bits(bits),
            rows: acc.rows,
            failed: acc.failed,
            mean_score: mean(&acc.scores),
            mean_irm_weight: mean(&acc.irm_weights),
            mean_log10_tau: mean(&acc.log10_taus),
        })
        .collect())
}

pub fn emit_summary(rows: &[SummaryRow]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| HarnessError::Table(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output of utf-8 fields is utf-8"))
}

pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>> {
    Ok(csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()?)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    std::fs::write(path, emit_summary(rows)?).map_err(io_error(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(model: ModelKind, k: usize, fraction: f64, score: f64) -> ResultRow {
        ResultRow {
            target: "t".into(),
            target_index: 0,
            observed_fraction: fraction,
            fraction_index: 0,
            model,
            k,
            n_test: 90,
            score: Some(score),
            tau: None,
            log10_tau: None,
            irm_weight: None,
            best_system: None,
            weights: vec![],
            seconds: None,
            seed: 0,
            error: None,
        }
    }

    #[test]
    fn single_row_and_mean() {
        let one = summarize(&[row(ModelKind::Irm, 0, 0.3, 4.0)], false).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].mean_score, Some(4.0));
        assert_eq!((one[0].model, one[0].k, one[0].observed_fraction), (ModelKind::Irm, 0, 0.3));

        let two = summarize(&[row(ModelKind::Irm, 0, 0.3, 4.0), row(ModelKind::Irm, 0, 0.3, 6.0)], false)
            .unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].mean_score, Some(5.0));
        assert_eq!(two[0].rows, 2);
    }

    #[test]
    fn failures_and_exclusion() {
        let mut bad = row(ModelKind::Hybrid, 2, 0.1, 0.0);
        bad.score = None;
        bad.error = Some("boom".into());
        let mut good = row(ModelKind::Hybrid, 2, 0.1, 3.0);
        good.irm_weight = Some(0.25);
        good.log10_tau = Some(-1.0);
        let rows = vec![bad, good, row(ModelKind::Irm, 0, 0.5, 1.0)];
        let s = summarize(&rows, false).unwrap();
        assert_eq!(s[0].model, ModelKind::Irm);
        assert_eq!((s[1].rows, s[1].failed), (2, 1));
        assert_eq!(s[1].mean_score, Some(3.0));
        assert_eq!(s[1].mean_irm_weight, Some(0.25));
        assert_eq!(s[1].mean_log10_tau, Some(-1.0));

        let s = summarize(&rows, true).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].observed_fraction, 0.5);
        assert!(matches!(summarize(&[], false), Err(HarnessError::EmptyInput)));
        assert!(matches!(
            summarize(&[row(ModelKind::Irm, 0, 0.5, 1.0)], true),
            Err(HarnessError::EmptyInput)
        ));
    }

    #[test]
    fn summary_csv_round_trip() {
        let rows = vec![row(ModelKind::Irm, 0, 0.2, 1.5), row(ModelKind::Analogy, 5, 0.2, 2.5)];
        let s = summarize(&rows, false).unwrap();
        assert_eq!(parse_summary(&emit_summary(&s).unwrap()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn group_counts_partition_the_rows(
            spec in prop::collection::vec((0usize..3, 0usize..3, 1usize..10, 0.0f64..100.0), 1..60),
        ) {
            let rows: Vec<ResultRow> = spec
                .iter()
                .map(|&(m, k, f, s)| row(ModelKind::ALL[m], k, f as f64 / 10.0, s))
                .collect();
            let summary = summarize(&rows, false).unwrap();
            prop_assert_eq!(summary.iter().map(|g| g.rows).sum::<usize>(), rows.len());
            for g in &summary {
                let members: Vec<&ResultRow> = rows
                    .iter()
                    .filter(|r| r.model == g.model && r.k == g.k && r.observed_fraction == g.observed_fraction)
                    .collect();
                prop_assert_eq!(members.len(), g.rows);
            }
            let keys: Vec<_> = summary.iter().map(|g| (g.model, g.k, g.observed_fraction.to_bits())).collect();
            let mut sorted = keys.clone();
            sorted.sort();
            prop_assert_eq!(keys, sorted);
        }
    }
}
