//! Binary Y/N agreement between two annotators and Cohen's kappa.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::records::DecisionRecord;
use crate::error::{Error, Result};
use crate::sheets::Decision;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Binary {
    Y,
    N,
}

/// `yes`, `rather_yes` → Y; `rather_no`, `no` → N.
pub fn to_binary(d: Decision) -> Binary {
    match d {
        Decision::Yes | Decision::RatherYes => Binary::Y,
        Decision::RatherNo | Decision::No => Binary::N,
    }
}

/// Rows are the first annotator, columns the second.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix2x2 {
    pub yy: u64,
    pub yn: u64,
    pub ny: u64,
    pub nn: u64,
}

impl ConfusionMatrix2x2 {
    pub fn new(yy: u64, yn: u64, ny: u64, nn: u64) -> Self {
        ConfusionMatrix2x2 { yy, yn, ny, nn }
    }

    pub fn total(&self) -> u64 {
        self.yy + self.yn + self.ny + self.nn
    }

    /// (Y, N) totals of the first annotator.
    pub fn row_totals(&self) -> (u64, u64) {
        (self.yy + self.yn, self.ny + self.nn)
    }

    /// (Y, N) totals of the second annotator.
    pub fn column_totals(&self) -> (u64, u64) {
        (self.yy + self.ny, self.yn + self.nn)
    }

    pub fn add(&mut self, a: Binary, b: Binary) {
        match (a, b) {
            (Binary::Y, Binary::Y) => self.yy += 1,
            (Binary::Y, Binary::N) => self.yn += 1,
            (Binary::N, Binary::Y) => self.ny += 1,
            (Binary::N, Binary::N) => self.nn += 1,
        }
    }

    /// Both annotators' labels flipped.
    pub fn swap_labels(&self) -> Self {
        ConfusionMatrix2x2::new(self.nn, self.ny, self.yn, self.yy)
    }

    /// The annotators exchanged.
    pub fn transpose(&self) -> Self {
        ConfusionMatrix2x2::new(self.yy, self.ny, self.yn, self.nn)
    }

    /// Checks published cell values against published row/column/grand totals.
    pub fn check_marginals(&self, rows: (u64, u64), cols: (u64, u64), total: u64) -> Result<()> {
        if self.row_totals() != rows || self.column_totals() != cols || self.total() != total {
            return Err(Error::Invalid(format!(
                "confusion cells {self:?} inconsistent with marginals rows {rows:?}, columns {cols:?}, total {total}"
            )));
        }
        Ok(())
    }

    /// Solves the NN cell from the other three cells and the grand total.
    pub fn reconcile_nn(yy: u64, yn: u64, ny: u64, total: u64) -> Result<Self> {
        let known = yy + yn + ny;
        if known > total {
            return Err(Error::Invalid(format!(
                "cells sum to {known}, above total {total}"
            )));
        }
        Ok(ConfusionMatrix2x2::new(yy, yn, ny, total - known))
    }
}

impl std::ops::Add for ConfusionMatrix2x2 {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        ConfusionMatrix2x2::new(
            self.yy + o.yy,
            self.yn + o.yn,
            self.ny + o.ny,
            self.nn + o.nn,
        )
    }
}

fn keyed(records: &[DecisionRecord]) -> Result<BTreeMap<(&str, &str), &DecisionRecord>> {
    let mut map = BTreeMap::new();
    for r in records {
        if map
            .insert((r.lemma.as_str(), r.class_id.as_str()), r)
            .is_some()
        {
            return Err(Error::Invalid(format!(
                "annotator {} judged ({}, {}) more than once",
                r.annotator_id, r.lemma, r.class_id
            )));
        }
    }
    Ok(map)
}

/// Counts binary decision pairs, matching records on (lemma, class).
pub fn confusion(
    first: &[DecisionRecord],
    second: &[DecisionRecord],
) -> Result<ConfusionMatrix2x2> {
    let a = keyed(first)?;
    let b = keyed(second)?;
    let unmatched: BTreeSet<String> = a
        .keys()
        .filter(|k| !b.contains_key(*k))
        .chain(b.keys().filter(|k| !a.contains_key(*k)))
        .map(|(l, c)| format!("{l}/{c}"))
        .collect();
    if !unmatched.is_empty() || first.len() != second.len() {
        return Err(Error::UnmatchedPairs(
            unmatched.into_iter().take(10).collect(),
        ));
    }
    let mut m = ConfusionMatrix2x2::default();
    for (k, ra) in &a {
        m.add(to_binary(ra.decision), to_binary(b[k].decision));
    }
    Ok(m)
}

pub fn observed_agreement(m: &ConfusionMatrix2x2) -> Result<f64> {
    let total = m.total();
    if total == 0 {
        return Err(Error::Undefined("agreement over zero decisions".into()));
    }
    Ok((m.yy + m.nn) as f64 / total as f64)
}

/// Chance agreement from the product of the annotators' marginal rates.
pub fn chance_agreement(m: &ConfusionMatrix2x2) -> Result<f64> {
    let n = m.total() as f64;
    if n == 0.0 {
        return Err(Error::Undefined(
            "chance agreement over zero decisions".into(),
        ));
    }
    let (ry, rn) = m.row_totals();
    let (cy, cn) = m.column_totals();
    Ok((ry as f64 * cy as f64 + rn as f64 * cn as f64) / (n * n))
}

/// `(p_o - p_e) / (1 - p_e)`.
pub fn cohen_kappa(m: &ConfusionMatrix2x2) -> Result<f64> {
    let po = observed_agreement(m)?;
    let pe = chance_agreement(m)?;
    if pe >= 1.0 {
        return Err(Error::Undefined("kappa with chance agreement 1".into()));
    }
    Ok((po - pe) / (1.0 - pe))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sheets::SetId;

    fn rec(lemma: &str, class: &str, d: Decision) -> DecisionRecord {
        DecisionRecord {
            annotator_id: "A".into(),
            lemma: lemma.into(),
            class_id: class.into(),
            decision: d,
            classifier_score: 0.5,
            set_id: SetId(1),
            batch_number: 1,
            scores_shown: false,
            elapsed_ms: None,
            comment: None,
        }
    }

    #[test]
    fn binary_mapping() {
        assert_eq!(to_binary(Decision::Yes), Binary::Y);
        assert_eq!(to_binary(Decision::RatherYes), Binary::Y);
        assert_eq!(to_binary(Decision::RatherNo), Binary::N);
        assert_eq!(to_binary(Decision::No), Binary::N);
    }

    #[test]
    fn self_agreement_is_diagonal() {
        let a: Vec<_> = Decision::ALL
            .iter()
            .enumerate()
            .map(|(i, &d)| rec(&format!("l{i}"), "c", d))
            .collect();
        let m = confusion(&a, &a).unwrap();
        assert_eq!((m.yn, m.ny), (0, 0));
        assert_eq!(observed_agreement(&m).unwrap(), 1.0);
        assert_eq!(cohen_kappa(&m).unwrap(), 1.0);
    }

    #[test]
    fn pairs_matched_by_key_not_order() {
        let a = vec![rec("x", "c1", Decision::Yes), rec("y", "c1", Decision::No)];
        let b = vec![
            rec("y", "c1", Decision::RatherYes),
            rec("x", "c1", Decision::RatherYes),
        ];
        assert_eq!(
            confusion(&a, &b).unwrap(),
            ConfusionMatrix2x2::new(1, 0, 1, 0)
        );
    }

    #[test]
    fn unmatched_keys_listed() {
        let a = vec![rec("x", "c1", Decision::Yes), rec("y", "c1", Decision::No)];
        let b = vec![rec("x", "c1", Decision::Yes), rec("z", "c2", Decision::No)];
        match confusion(&a, &b).unwrap_err() {
            Error::UnmatchedPairs(keys) => {
                assert_eq!(keys, vec!["y/c1".to_string(), "z/c2".to_string()])
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn kappa_undefined_when_chance_is_one() {
        let m = ConfusionMatrix2x2::new(0, 0, 0, 10);
        assert!(cohen_kappa(&m).is_err());
        assert!(observed_agreement(&ConfusionMatrix2x2::default()).is_err());
    }

    #[test]
    fn set2_reconciled_from_marginals() {
        // Published: YY 63, YN 28, NY 65, rows (91, 409), columns (128, 372), total 500.
        let m = ConfusionMatrix2x2::reconcile_nn(63, 28, 65, 500).unwrap();
        assert_eq!(m.nn, 344);
        m.check_marginals((91, 409), (128, 372), 500).unwrap();
        assert!(ConfusionMatrix2x2::new(63, 28, 65, 444)
            .check_marginals((91, 409), (128, 372), 500)
            .is_err());
    }
}
