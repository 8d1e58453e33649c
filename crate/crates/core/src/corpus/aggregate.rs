use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-lemma corpus frequency and mean per-class score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaAggregate {
    pub lemma: String,
    pub freq: u64,
    pub class_scores: Vec<f64>,
}

/// Running sum and count of occurrence scores. Merging is order-independent
/// up to floating-point summation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreAccumulator {
    pub count: u64,
    pub sum: Vec<f64>,
}

impl ScoreAccumulator {
    pub fn new(num_classes: usize) -> Self {
        ScoreAccumulator {
            count: 0,
            sum: vec![0.0; num_classes],
        }
    }

    pub fn add(&mut self, scores: &[f64]) {
        debug_assert_eq!(scores.len(), self.sum.len());
        for (s, v) in self.sum.iter_mut().zip(scores) {
            *s += v;
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &ScoreAccumulator) {
        for (s, v) in self.sum.iter_mut().zip(&other.sum) {
            *s += v;
        }
        self.count += other.count;
    }

    pub fn finish(&self, lemma: impl Into<String>) -> Result<LemmaAggregate> {
        if self.count == 0 {
            return Err(Error::Invalid(
                "cannot aggregate a lemma with no occurrences".into(),
            ));
        }
        let n = self.count as f64;
        Ok(LemmaAggregate {
            lemma: lemma.into(),
            freq: self.count,
            class_scores: self.sum.iter().map(|s| s / n).collect(),
        })
    }
}

/// Arithmetic mean of per-occurrence score vectors for one lemma.
pub fn aggregate(lemma: &str, occurrences: &[Vec<f64>]) -> Result<LemmaAggregate> {
    let first = occurrences
        .first()
        .ok_or_else(|| Error::Invalid(format!("lemma `{lemma}` has no occurrences")))?;
    let mut acc = ScoreAccumulator::new(first.len());
    for o in occurrences {
        if o.len() != first.len() {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                actual: o.len(),
            });
        }
        acc.add(o);
    }
    acc.finish(lemma)
}
