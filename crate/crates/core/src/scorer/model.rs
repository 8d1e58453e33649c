use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use crate::error::{Error, Result};

/// K independent sigmoid heads over a D-dimensional sparse input.
/// `weights` is row-major, one row of length `dim` per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub num_classes: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Same shape as [`ModelParams`].
pub type Gradient = ModelParams;

pub const INIT_RANGE: f64 = 0.05;

impl ModelParams {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        ModelParams {
            num_classes,
            dim,
            weights: vec![0.0; num_classes * dim],
            bias: vec![0.0; num_classes],
        }
    }

    /// Weights uniform in `(-INIT_RANGE, INIT_RANGE)`, zero biases.
    pub fn init(num_classes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..num_classes * dim)
            .map(|_| rng.random_range(-INIT_RANGE..INIT_RANGE))
            .collect();
        ModelParams {
            num_classes,
            dim,
            weights,
            bias: vec![0.0; num_classes],
        }
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn row_mut(&mut self, class: usize) -> &mut [f64] {
        &mut self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.num_classes == other.num_classes
            && self.dim == other.dim
            && self.weights.len() == other.weights.len()
            && self.bias.len() == other.bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub fn fill_zero(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = 0.0);
        self.bias.iter_mut().for_each(|b| *b = 0.0);
    }

    /// `W_k . x + b_k` for every head.
    pub fn logits(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        Ok((0..self.num_classes)
            .map(|k| {
                let row = self.row(k);
                self.bias[k] + x.iter().map(|(i, v)| row[i] * v).sum::<f64>()
            })
            .collect())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-class affiliation scores, each `sigmoid(W_k . x + b_k)`. The scores are
/// independent and do not sum to one.
pub fn predict_scores(model: &ModelParams, x: &FeatureVector) -> Result<Vec<f64>> {
    Ok(model.logits(x)?.into_iter().map(sigmoid).collect())
}

/// Index of the highest score; ties resolve to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    scores
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_scores_half() {
        let m = ModelParams::zeros(4, 8);
        let x = FeatureVector::from_entries(vec![(1, 2.0), (5, -1.0)], 8).unwrap();
        assert_eq!(predict_scores(&m, &x).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn scores_increase_with_logit() {
        let mut m = ModelParams::zeros(1, 2);
        let x = FeatureVector::from_entries(vec![(0, 1.0)], 2).unwrap();
        let mut prev = 0.0;
        for w in [-10.0, -1.0, 0.0, 1.0, 10.0, 30.0] {
            m.weights[0] = w;
            let s = predict_scores(&m, &x).unwrap()[0];
            assert!(s > prev);
            prev = s;
        }
        assert!(prev > 1.0 - 1e-12);
    }

    #[test]
    fn hand_computed_two_class() {
        // W = [[0.5, -1.0, 2.0], [0.0, 0.25, -0.5]], b = [0.1, -0.2], x = (1.0, 0, 2.0) sparse at 0 and 2.
        // logits: 0.5 + 4.0 + 0.1 = 4.6 ; 0 - 1.0 - 0.2 = -1.2
        // sigmoid(4.6)  = 0.990048198133095674...
        // sigmoid(-1.2) = 0.231475216500982365...
        let m = ModelParams {
            num_classes: 2,
            dim: 3,
            weights: vec![0.5, -1.0, 2.0, 0.0, 0.25, -0.5],
            bias: vec![0.1, -0.2],
        };
        let x = FeatureVector::from_entries(vec![(2, 2.0), (0, 1.0)], 3).unwrap();
        let s = predict_scores(&m, &x).unwrap();
        assert!((s[0] - 0.990_048_198_133_095_7).abs() < 1e-15);
        assert!((s[1] - 0.231_475_216_500_982_4).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let m = ModelParams::zeros(2, 4);
        let x = FeatureVector::zeros(8);
        assert!(matches!(
            predict_scores(&m, &x),
            Err(Error::DimensionMismatch {
                expected: 4,
                actual: 8
            })
        ));
    }

    #[test]
    fn init_is_seeded() {
        let a = ModelParams::init(3, 16, 9);
        assert_eq!(a, ModelParams::init(3, 16, 9));
        assert_ne!(a, ModelParams::init(3, 16, 10));
        assert!(a.weights.iter().all(|w| w.abs() < INIT_RANGE));
        assert!(a.bias.iter().all(|&b| b == 0.0));
    }
}
