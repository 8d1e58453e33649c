//! Score buckets of fixed width, per-bucket mean human decision, and the
//! score at which the mean decision crosses the middle of the 0–3 scale.

use serde::{Deserialize, Serialize};

use super::correlation::{pearson, spearman, Correlation};
use super::records::DecisionRecord;
use crate::error::{Error, Result};

pub const DEFAULT_WIDTH: f64 = 0.05;
/// Middle of the 0–3 decision scale.
pub const CROSSING_LEVEL: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStat {
    pub bucket_low: f64,
    pub bucket_high: f64,
    pub count: usize,
    /// Mean decision value, `None` for empty buckets.
    pub mean_human_score: Option<f64>,
}

impl BucketStat {
    pub fn midpoint(&self) -> f64 {
        (self.bucket_low + self.bucket_high) / 2.0
    }
}

/// Bucket index `floor(score / width)`; a score of exactly 1 goes into the
/// last bucket. A 1e-9 relative guard keeps decimal bucket edges such as 0.15
/// from falling into the bucket below through binary rounding.
pub fn bucket_index(score: f64, width: f64) -> usize {
    let n = bucket_count(width);
    (((score / width) + 1e-9).floor().max(0.0) as usize).min(n - 1)
}

pub fn bucket_count(width: f64) -> usize {
    (1.0 / width).round() as usize
}

pub fn bucketize(records: &[DecisionRecord], width: f64) -> Result<Vec<BucketStat>> {
    if !(width > 0.0 && width <= 1.0) {
        return Err(Error::Invalid(format!(
            "bucket width {width} must be in (0, 1]"
        )));
    }
    let n = bucket_count(width);
    let mut sums = vec![0u64; n];
    let mut counts = vec![0usize; n];
    for r in records {
        if !(0.0..=1.0).contains(&r.classifier_score) {
            return Err(Error::Invalid(format!(
                "score {} outside [0, 1]",
                r.classifier_score
            )));
        }
        let i = bucket_index(r.classifier_score, width);
        sums[i] += r.decision.value() as u64;
        counts[i] += 1;
    }
    Ok((0..n)
        .map(|i| BucketStat {
            bucket_low: i as f64 * width,
            bucket_high: ((i + 1) as f64 * width).min(1.0),
            count: counts[i],
            mean_human_score: (counts[i] > 0).then(|| sums[i] as f64 / counts[i] as f64),
        })
        .collect())
}

fn non_empty(buckets: &[BucketStat]) -> Vec<(f64, f64)> {
    buckets
        .iter()
        .filter_map(|b| b.mean_human_score.map(|m| (b.midpoint(), m)))
        .collect()
}

/// Pearson and Spearman correlation between bucket midpoints and bucket mean
/// decisions, over non-empty buckets.
pub fn bucketed_correlation(buckets: &[BucketStat]) -> Result<(Correlation, Correlation)> {
    let pts = non_empty(buckets);
    if pts.len() < 3 {
        return Err(Error::Undefined(format!(
            "bucketed correlation needs 3 non-empty buckets, got {}",
            pts.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok((pearson(&x, &y)?, spearman(&x, &y)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub threshold: Option<f64>,
    /// Whether non-empty bucket means never decrease with score.
    pub monotone: bool,
    /// Adjacent non-empty bucket pairs whose mean decreases.
    pub inversions: usize,
}

/// Score where the bucket mean decision first reaches [`CROSSING_LEVEL`],
/// linearly interpolated between the midpoints of the last bucket below it and
/// the first bucket at or above it.
pub fn threshold_estimate(buckets: &[BucketStat]) -> ThresholdEstimate {
    let pts = non_empty(buckets);
    let inversions = pts.windows(2).filter(|w| w[1].1 < w[0].1).count();
    let mut threshold = None;
    if pts.len() >= 2 {
        if let Some(j) = pts.iter().position(|&(_, m)| m >= CROSSING_LEVEL) {
            let (x1, y1) = pts[j];
            if y1 == CROSSING_LEVEL {
                threshold = Some(x1);
            } else if j > 0 {
                let (x0, y0) = pts[j - 1];
                threshold = Some(x0 + (CROSSING_LEVEL - y0) / (y1 - y0) * (x1 - x0));
            }
        }
    }
    ThresholdEstimate {
        threshold,
        monotone: inversions == 0,
        inversions,
    }
}
