//! Sparse binary focal cross entropy over K independent sigmoid heads.
//!
//! For gold class `g` and scores `p`:
//!
//! ```text
//! L = -(1 - p_g)^γ · ln p_g  +  Σ_{k≠g} -(p_k)^γ · ln(1 - p_k)
//! ```
//!
//! Per-head terms are summed. No α weighting.

use super::features::FeatureVector;
use super::model::{sigmoid, Gradient, ModelParams};
use crate::error::{Error, Result};

/// Scores are clamped to `[EPS, 1 - EPS]` inside the loss.
pub const EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalLoss {
    pub value: f64,
    /// Number of scores that had to be clamped away from 0 or 1.
    pub clamp_events: usize,
}

fn clamp_score(p: f64, events: &mut usize) -> f64 {
    if p < EPS {
        *events += 1;
        EPS
    } else if p > 1.0 - EPS {
        *events += 1;
        1.0 - EPS
    } else {
        p
    }
}

fn check(scores: &[f64], gold: usize, gamma: f64) -> Result<()> {
    if gold >= scores.len() {
        return Err(Error::Invalid(format!(
            "gold index {gold} outside {} classes",
            scores.len()
        )));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Invalid(format!(
            "focal exponent {gamma} must be finite and non-negative"
        )));
    }
    if let Some(p) = scores.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Invalid(format!("score {p} outside [0, 1]")));
    }
    Ok(())
}

pub fn focal_bce_loss(scores: &[f64], gold: usize, gamma: f64) -> Result<FocalLoss> {
    check(scores, gold, gamma)?;
    let mut clamp_events = 0;
    let mut value = 0.0;
    for (k, &raw) in scores.iter().enumerate() {
        let p = clamp_score(raw, &mut clamp_events);
        value += if k == gold {
            -(1.0 - p).powf(gamma) * p.ln()
        } else {
            -p.powf(gamma) * (1.0 - p).ln()
        };
    }
    if clamp_events > 0 {
        log::debug!("focal loss clamped {clamp_events} score(s)");
    }
    Ok(FocalLoss {
        value,
        clamp_events,
    })
}

/// dL/dz_k for every head logit `z_k`, evaluated at the clamped scores.
pub fn logit_gradient(scores: &[f64], gold: usize, gamma: f64) -> Result<Vec<f64>> {
    check(scores, gold, gamma)?;
    let mut events = 0;
    Ok(scores
        .iter()
        .enumerate()
        .map(|(k, &raw)| {
            let p = clamp_score(raw, &mut events);
            let q = 1.0 - p;
            if k == gold {
                gamma * p * q.powf(gamma) * p.ln() - q.powf(gamma + 1.0)
            } else {
                p.powf(gamma + 1.0) - gamma * p.powf(gamma) * q * q.ln()
            }
        })
        .collect())
}

/// Adds `scale * dL/dθ` for one example into `grad`. Returns the loss.
pub(crate) fn accumulate_gradient(
    model: &ModelParams,
    x: &FeatureVector,
    gold: usize,
    gamma: f64,
    scale: f64,
    grad: &mut Gradient,
) -> Result<FocalLoss> {
    let scores: Vec<f64> = model.logits(x)?.into_iter().map(sigmoid).collect();
    let loss = focal_bce_loss(&scores, gold, gamma)?;
    let dz = logit_gradient(&scores, gold, gamma)?;
    for (k, d) in dz.into_iter().enumerate() {
        let d = d * scale;
        grad.bias[k] += d;
        let row = grad.row_mut(k);
        for (i, v) in x.iter() {
            row[i] += d * v;
        }
    }
    Ok(loss)
}

/// Gradient of the focal loss with respect to every weight and bias.
pub fn loss_gradient(
    model: &ModelParams,
    x: &FeatureVector,
    gold: usize,
    gamma: f64,
) -> Result<Gradient> {
    let mut grad = ModelParams::zeros(model.num_classes, model.dim);
    accumulate_gradient(model, x, gold, gamma, 1.0, &mut grad)?;
    Ok(grad)
}
