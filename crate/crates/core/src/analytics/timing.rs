use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::DecisionRecord;
use crate::error::{Error, Result};

/// Time spent on one batch by one annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchTime {
    pub annotator_id: String,
    pub batch_number: u8,
    /// `None` when no time was recorded.
    pub minutes: Option<f64>,
    pub decisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorTiming {
    pub annotator_id: String,
    pub batches: Vec<BatchTime>,
    pub total_minutes: Option<f64>,
    pub total_decisions: usize,
    pub seconds_per_decision: Option<f64>,
}

/// Per-annotator totals. Any batch without a recorded time makes the
/// annotator's totals absent rather than zero.
pub fn timing_summary(batches: &[BatchTime]) -> Result<Vec<AnnotatorTiming>> {
    let mut by_annotator: BTreeMap<&str, Vec<&BatchTime>> = BTreeMap::new();
    for b in batches {
        by_annotator
            .entry(b.annotator_id.as_str())
            .or_default()
            .push(b);
    }
    by_annotator
        .into_iter()
        .map(|(annotator, mut list)| {
            list.sort_by_key(|b| b.batch_number);
            let total_decisions: usize = list.iter().map(|b| b.decisions).sum();
            if total_decisions == 0 {
                return Err(Error::Undefined(format!(
                    "annotator {annotator} has zero decisions"
                )));
            }
            let total_minutes = list.iter().map(|b| b.minutes).sum::<Option<f64>>();
            Ok(AnnotatorTiming {
                annotator_id: annotator.to_string(),
                batches: list.into_iter().cloned().collect(),
                total_minutes,
                total_decisions,
                seconds_per_decision: total_minutes.map(|m| m * 60.0 / total_decisions as f64),
            })
        })
        .collect()
}

/// Batch times from per-decision elapsed times; a batch with any missing
/// elapsed value has no time. `overrides` (annotator, batch) → minutes, e.g.
/// self-reported totals, take precedence.
pub fn batch_times(
    records: &[DecisionRecord],
    overrides: &BTreeMap<(String, u8), f64>,
) -> Vec<BatchTime> {
    let mut groups: BTreeMap<(String, u8), (usize, Option<u64>)> = BTreeMap::new();
    for r in records {
        let e = groups
            .entry((r.annotator_id.clone(), r.batch_number))
            .or_insert((0, Some(0)));
        e.0 += 1;
        e.1 = match (e.1, r.elapsed_ms) {
            (Some(acc), Some(ms)) => Some(acc + ms),
            _ => None,
        };
    }
    groups
        .into_iter()
        .map(
            |((annotator_id, batch_number), (decisions, ms))| BatchTime {
                minutes: overrides
                    .get(&(annotator_id.clone(), batch_number))
                    .copied()
                    .or(ms.map(|ms| ms as f64 / 60_000.0)),
                annotator_id,
                batch_number,
                decisions,
            },
        )
        .collect()
}

/// Parses `annotator<TAB>batch<TAB>minutes` lines (optional header, `#` comments).
pub fn parse_batch_minutes(text: &str, source_name: &str) -> Result<BTreeMap<(String, u8), f64>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty()
            || line.starts_with('#')
            || (i == 0 && line.starts_with("annotator"))
        {
            continue;
        }
        let err = |m: String| Error::parse(source_name, i + 1, m);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(err(format!("expected 3 columns, found {}", f.len())));
        }
        let batch: u8 = f[1]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad batch `{}`", f[1])))?;
        let minutes: f64 = f[2]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad minutes `{}`", f[2])))?;
        out.insert((f[0].trim().to_string(), batch), minutes);
    }
    Ok(out)
}
