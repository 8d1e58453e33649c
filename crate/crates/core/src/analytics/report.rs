//! Full statistics report over a set of decision records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::agreement::{cohen_kappa, confusion, observed_agreement, ConfusionMatrix2x2};
use super::buckets::{
    bucketed_correlation, bucketize, threshold_estimate, BucketStat, ThresholdEstimate,
    DEFAULT_WIDTH,
};
use super::correlation::{pearson, spearman, Correlation};
use super::records::DecisionRecord;
use super::timing::{batch_times, timing_summary, AnnotatorTiming};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub label: String,
    pub first_annotator: String,
    pub second_annotator: String,
    pub matrix: ConfusionMatrix2x2,
    pub observed: f64,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub decisions: usize,
    pub agreement: Vec<AgreementRow>,
    /// Every individual decision against its pair's score.
    pub raw_per_decision: Option<(Correlation, Correlation)>,
    /// Decisions averaged over annotators per lemma-class pair.
    pub raw_averaged: Option<(Correlation, Correlation)>,
    pub buckets: Vec<BucketStat>,
    pub bucketed: Option<(Correlation, Correlation)>,
    pub threshold: ThresholdEstimate,
    pub timing: Vec<AnnotatorTiming>,
    /// Mean minutes per batch number across annotators with recorded times.
    pub batch_mean_minutes: BTreeMap<u8, f64>,
}

fn correlations(x: &[f64], y: &[f64]) -> Option<(Correlation, Correlation)> {
    match (pearson(x, y), spearman(x, y)) {
        (Ok(r), Ok(rho)) => Some((r, rho)),
        _ => None,
    }
}

fn agreement_rows(records: &[DecisionRecord]) -> Result<Vec<AgreementRow>> {
    let mut by_set: BTreeMap<_, BTreeMap<&str, Vec<DecisionRecord>>> = BTreeMap::new();
    for r in records {
        by_set
            .entry(r.set_id)
            .or_default()
            .entry(r.annotator_id.as_str())
            .or_default()
            .push(r.clone());
    }
    let annotators: BTreeSet<&str> = records.iter().map(|r| r.annotator_id.as_str()).collect();
    if annotators.len() != 2 {
        log::warn!(
            "agreement needs exactly two annotators, found {}",
            annotators.len()
        );
        return Ok(Vec::new());
    }
    let names: Vec<&str> = annotators.into_iter().collect();
    let mut rows = Vec::new();
    let mut all = ConfusionMatrix2x2::default();
    for (set, per) in &by_set {
        let (Some(a), Some(b)) = (per.get(names[0]), per.get(names[1])) else {
            log::warn!("{set} was not annotated by both annotators; skipped in agreement");
            continue;
        };
        let m = confusion(a, b)?;
        all = all + m;
        rows.push(row(set.to_string(), &names, m)?);
    }
    if !rows.is_empty() {
        rows.insert(0, row("All".into(), &names, all)?);
    }
    Ok(rows)
}

fn row(label: String, names: &[&str], matrix: ConfusionMatrix2x2) -> Result<AgreementRow> {
    Ok(AgreementRow {
        label,
        first_annotator: names[0].to_string(),
        second_annotator: names[1].to_string(),
        observed: observed_agreement(&matrix)?,
        kappa: cohen_kappa(&matrix).ok(),
        matrix,
    })
}

/// Computes every statistic. `batch_minutes` carries recorded batch totals
/// that override times derived from per-decision elapsed values.
pub fn analyze(
    records: &[DecisionRecord],
    batch_minutes: &BTreeMap<(String, u8), f64>,
) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::Invalid("no decision records".into()));
    }
    let agreement = agreement_rows(records)?;

    let x: Vec<f64> = records.iter().map(|r| r.classifier_score).collect();
    let y: Vec<f64> = records.iter().map(|r| r.decision.value() as f64).collect();
    let raw_per_decision = correlations(&x, &y);

    let mut pairs: BTreeMap<(&str, &str), (f64, f64, usize)> = BTreeMap::new();
    for r in records {
        let e = pairs
            .entry((&r.lemma, &r.class_id))
            .or_insert((r.classifier_score, 0.0, 0));
        e.1 += r.decision.value() as f64;
        e.2 += 1;
    }
    let (ax, ay): (Vec<f64>, Vec<f64>) = pairs
        .values()
        .map(|&(s, sum, n)| (s, sum / n as f64))
        .unzip();
    let raw_averaged = correlations(&ax, &ay);

    let buckets = bucketize(records, DEFAULT_WIDTH)?;
    let bucketed = bucketed_correlation(&buckets).ok();
    let threshold = threshold_estimate(&buckets);

    let times = batch_times(records, batch_minutes);
    let timing = timing_summary(&times)?;
    let mut per_batch: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for t in &times {
        if let Some(m) = t.minutes {
            per_batch.entry(t.batch_number).or_default().push(m);
        }
    }
    let batch_mean_minutes = per_batch
        .into_iter()
        .map(|(b, v)| (b, v.iter().sum::<f64>() / v.len() as f64))
        .collect();

    Ok(Report {
        decisions: records.len(),
        agreement,
        raw_per_decision,
        raw_averaged,
        buckets,
        bucketed,
        threshold,
        timing,
        batch_mean_minutes,
    })
}

/// Two-decimal display value.
pub fn display2(x: f64) -> String {
    format!("{x:.2}")
}

fn fmt_corr(out: &mut String, label: &str, c: &Option<(Correlation, Correlation)>) {
    match c {
        Some((r, rho)) => {
            let _ = writeln!(
                out,
                "  {label:<22} r({}) = {} (p = {:.3e})   rho = {} (n = {}, p = {:.3e})",
                r.df,
                display2(r.coefficient),
                r.p_value,
                display2(rho.coefficient),
                rho.n,
                rho.p_value
            );
        }
        None => {
            let _ = writeln!(out, "  {label:<22} undefined");
        }
    }
}

impl Report {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Decisions: {}", self.decisions);
        let _ = writeln!(out);
        let _ = writeln!(out, "Agreement (Y = y/r_y, N = r_n/n)");
        if self.agreement.is_empty() {
            let _ = writeln!(
                out,
                "  unavailable (needs two annotators over the same pairs)"
            );
        }
        for a in &self.agreement {
            let m = &a.matrix;
            let (ry, rn) = m.row_totals();
            let (cy, cn) = m.column_totals();
            let _ = writeln!(
                out,
                "  {:<5} {}\\{}: YY {} YN {} NY {} NN {} | rows {}/{} cols {}/{} | IAA {} ({:.4})  kappa {}",
                a.label,
                a.first_annotator,
                a.second_annotator,
                m.yy,
                m.yn,
                m.ny,
                m.nn,
                ry,
                rn,
                cy,
                cn,
                display2(a.observed),
                a.observed,
                a.kappa.map_or("undefined".to_string(), |k| format!("{} ({k:.4})", display2(k)))
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Score/decision correlation");
        fmt_corr(&mut out, "per decision", &self.raw_per_decision);
        fmt_corr(&mut out, "annotators averaged", &self.raw_averaged);
        fmt_corr(&mut out, "bucketed (width 0.05)", &self.bucketed);
        let _ = writeln!(out);
        let _ = writeln!(out, "Buckets");
        for b in &self.buckets {
            let _ = writeln!(
                out,
                "  [{:.2}, {:.2}{}  n = {:>4}  mean = {}",
                b.bucket_low,
                b.bucket_high,
                if b.bucket_high >= 1.0 { "]" } else { ")" },
                b.count,
                b.mean_human_score
                    .map_or("-".to_string(), |m| format!("{m:.3}"))
            );
        }
        let _ = writeln!(out);
        match self.threshold.threshold {
            Some(t) => {
                let _ = writeln!(out, "Threshold (mean decision crosses 1.5): {t:.3}");
            }
            None => {
                let _ = writeln!(out, "Threshold (mean decision crosses 1.5): none");
            }
        }
        let _ = writeln!(
            out,
            "  bucket means {} ({} inversion(s))",
            if self.threshold.monotone {
                "monotone"
            } else {
                "not monotone"
            },
            self.threshold.inversions
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "Annotation time");
        for t in &self.timing {
            let batches: Vec<String> = t
                .batches
                .iter()
                .map(|b| {
                    format!(
                        "batch {}: {}",
                        b.batch_number,
                        b.minutes.map_or("absent".into(), |m| format!("{m:.1} min"))
                    )
                })
                .collect();
            let _ = writeln!(
                out,
                "  {:<6} {} | total {} over {} decisions, {}",
                t.annotator_id,
                batches.join(", "),
                t.total_minutes
                    .map_or("absent".into(), |m| format!("{m:.1} min")),
                t.total_decisions,
                t.seconds_per_decision
                    .map_or("time absent".into(), |s| format!("{s:.1} s/decision"))
            );
        }
        for (b, m) in &self.batch_mean_minutes {
            let _ = writeln!(out, "  batch {b} mean: {m:.1} min");
        }
        out
    }

    /// `name<TAB>value<TAB>n<TAB>p_value`, one statistic per line.
    pub fn render_summary(&self) -> String {
        let mut out = String::from("name\tvalue\tn\tp_value\n");
        let mut line = |name: &str, value: Option<f64>, n: usize, p: Option<f64>| {
            let _ = writeln!(
                out,
                "{name}\t{}\t{n}\t{}",
                value.map_or("NA".into(), |v| format!("{v:.6}")),
                p.map_or("NA".into(), |v| format!("{v:.6e}"))
            );
        };
        line(
            "decisions",
            Some(self.decisions as f64),
            self.decisions,
            None,
        );
        for a in &self.agreement {
            let n = a.matrix.total() as usize;
            line(&format!("iaa.{}", a.label), Some(a.observed), n, None);
            line(&format!("kappa.{}", a.label), a.kappa, n, None);
            for (cell, v) in [
                ("yy", a.matrix.yy),
                ("yn", a.matrix.yn),
                ("ny", a.matrix.ny),
                ("nn", a.matrix.nn),
            ] {
                line(
                    &format!("confusion.{}.{cell}", a.label),
                    Some(v as f64),
                    n,
                    None,
                );
            }
        }
        for (label, c) in [
            ("raw", &self.raw_per_decision),
            ("raw_averaged", &self.raw_averaged),
            ("bucketed", &self.bucketed),
        ] {
            match c {
                Some((r, rho)) => {
                    line(
                        &format!("pearson.{label}"),
                        Some(r.coefficient),
                        r.n,
                        Some(r.p_value),
                    );
                    line(
                        &format!("spearman.{label}"),
                        Some(rho.coefficient),
                        rho.n,
                        Some(rho.p_value),
                    );
                }
                None => {
                    line(&format!("pearson.{label}"), None, 0, None);
                    line(&format!("spearman.{label}"), None, 0, None);
                }
            }
        }
        let non_empty = self.buckets.iter().filter(|b| b.count > 0).count();
        line("threshold", self.threshold.threshold, non_empty, None);
        line(
            "threshold.inversions",
            Some(self.threshold.inversions as f64),
            non_empty,
            None,
        );
        for t in &self.timing {
            for b in &t.batches {
                line(
                    &format!("minutes.{}.batch{}", t.annotator_id, b.batch_number),
                    b.minutes,
                    b.decisions,
                    None,
                );
            }
            line(
                &format!("seconds_per_decision.{}", t.annotator_id),
                t.seconds_per_decision,
                t.total_decisions,
                None,
            );
        }
        for (b, m) in &self.batch_mean_minutes {
            line(&format!("minutes.mean.batch{b}"), Some(*m), 0, None);
        }
        out
    }

    /// Bucket curve for external plotting.
    pub fn render_buckets(&self) -> String {
        let mut out = String::from("bucket_low\tbucket_high\tmidpoint\tcount\tmean_human_score\n");
        for b in &self.buckets {
            let _ = writeln!(
                out,
                "{:.2}\t{:.2}\t{:.3}\t{}\t{}",
                b.bucket_low,
                b.bucket_high,
                b.midpoint(),
                b.count,
                b.mean_human_score
                    .map_or("NA".into(), |m| format!("{m:.6}"))
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_matches_published_rounding() {
        assert_eq!(display2(835.0 / 1000.0), "0.83");
        assert_eq!(display2(428.0 / 500.0), "0.86");
        assert_eq!(display2(407.0 / 500.0), "0.81");
    }
}
