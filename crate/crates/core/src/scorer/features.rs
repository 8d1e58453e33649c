//! Hashed context features for a target verb occurrence.

use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tokens on each side of the target that contribute context features.
pub const CONTEXT_WINDOW: usize = 5;

/// Sparse feature vector with strictly increasing indices in `[0, dim)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    indices: Vec<u32>,
    values: Vec<f64>,
    dim: usize,
}

impl FeatureVector {
    /// Builds a vector from unsorted `(index, value)` entries, summing duplicates.
    pub fn from_entries(mut entries: Vec<(u32, f64)>, dim: usize) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<u32> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i as usize >= dim {
                return Err(Error::Invalid(format!(
                    "feature index {i} outside dimension {dim}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Invalid(format!("non-finite feature value at {i}")));
            }
            match indices.last() {
                Some(&last) if last == i => *values.last_mut().unwrap() += v,
                _ => {
                    indices.push(i);
                    values.push(v);
                }
            }
        }
        Ok(FeatureVector {
            indices,
            values,
            dim,
        })
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .map(|&i| i as usize)
            .zip(self.values.iter().copied())
    }

    /// Copy with each entry's value replaced by `f(index, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        FeatureVector {
            indices: self.indices.clone(),
            values: self.iter().map(|(i, v)| f(i, v)).collect(),
            dim: self.dim,
        }
    }
}

fn bucket(namespace: &[u8], text: &str, dim: usize) -> u32 {
    let mut h = FnvHasher::default();
    h.write(namespace);
    h.write(text.as_bytes());
    (h.finish() % dim as u64) as u32
}

/// Feature vector for the verb at `target_position`: one target-lemma feature
/// plus a hashed bag of the lowercased tokens within [`CONTEXT_WINDOW`] on either side.
pub fn featurize(
    sentence: &[String],
    target_position: usize,
    target_lemma: &str,
    dim: usize,
) -> Result<FeatureVector> {
    if dim < 2 {
        return Err(Error::Invalid(format!(
            "feature dimension {dim} must be at least 2"
        )));
    }
    if target_position >= sentence.len() {
        return Err(Error::Invalid(format!(
            "target position {target_position} outside sentence of {} tokens",
            sentence.len()
        )));
    }
    let lo = target_position.saturating_sub(CONTEXT_WINDOW);
    let hi = (target_position + CONTEXT_WINDOW + 1).min(sentence.len());
    let mut entries = Vec::with_capacity(hi - lo);
    entries.push((bucket(b"L\x00", target_lemma, dim), 1.0));
    for (pos, token) in sentence.iter().enumerate().take(hi).skip(lo) {
        if pos == target_position {
            continue;
        }
        entries.push((bucket(b"C\x00", &token.to_lowercase(), dim), 1.0));
    }
    FeatureVector::from_entries(entries, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn deterministic() {
        let s = toks("the cat quickly ran home");
        assert_eq!(
            featurize(&s, 3, "run", 1 << 18).unwrap(),
            featurize(&s, 3, "run", 1 << 18).unwrap()
        );
    }

    #[test]
    fn single_token_sentence_has_only_lemma_feature() {
        let v = featurize(&toks("ran"), 0, "run", 1 << 18).unwrap();
        assert_eq!(v.nnz(), 1);
        assert_eq!(v.indices()[0], bucket(b"L\x00", "run", 1 << 18));
        assert_eq!(v.values(), &[1.0]);
    }

    #[test]
    fn tokens_outside_window_ignored() {
        // Target at 6; window covers 1..=11. Position 0 and 12 differ.
        let a = toks("AAA w1 w2 w3 w4 w5 VERB w7 w8 w9 w10 w11 BBB");
        let b = toks("ZZZ w1 w2 w3 w4 w5 VERB w7 w8 w9 w10 w11 YYY");
        let c = toks("AAA w1 w2 w3 w4 XX VERB w7 w8 w9 w10 w11 BBB");
        assert_eq!(
            featurize(&a, 6, "verb", 1024).unwrap(),
            featurize(&b, 6, "verb", 1024).unwrap()
        );
        assert_ne!(
            featurize(&a, 6, "verb", 1024).unwrap(),
            featurize(&c, 6, "verb", 1024).unwrap()
        );
    }

    #[test]
    fn duplicate_hashes_accumulate() {
        let v = featurize(&toks("go go go go"), 0, "go", 1 << 18).unwrap();
        let ctx = bucket(b"C\x00", "go", 1 << 18) as usize;
        let value = v.iter().find(|&(i, _)| i == ctx).unwrap().1;
        assert_eq!(value, 3.0);
    }

    #[test]
    fn position_out_of_range() {
        assert!(featurize(&toks("a b"), 2, "x", 16).is_err());
        assert!(featurize(&toks("a b"), 0, "x", 1).is_err());
    }

    #[test]
    fn indices_strictly_increasing() {
        let v = featurize(&toks("one two three four five six seven"), 3, "four", 8).unwrap();
        assert!(v.indices().windows(2).all(|w| w[0] < w[1]));
        assert!(v.indices().iter().all(|&i| (i as usize) < 8));
    }
}
