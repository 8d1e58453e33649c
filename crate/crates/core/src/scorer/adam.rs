use serde::{Deserialize, Serialize};

use super::model::{Gradient, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first: ModelParams,
    pub second: ModelParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &ModelParams) -> Self {
        AdamState {
            first: ModelParams::zeros(model.num_classes, model.dim),
            second: ModelParams::zeros(model.num_classes, model.dim),
            step: 0,
        }
    }
}

fn update_block(
    params: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    grad: &[f64],
    hyper: &AdamHyper,
    lr: f64,
    c1: f64,
    c2: f64,
) {
    for (((p, m), v), &g) in params
        .iter_mut()
        .zip(m.iter_mut())
        .zip(v.iter_mut())
        .zip(grad)
    {
        *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
        *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + hyper.eps);
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(
    model: &mut ModelParams,
    state: &mut AdamState,
    grad: &Gradient,
    lr: f64,
    hyper: &AdamHyper,
) -> Result<()> {
    if !model.same_shape(grad)
        || !model.same_shape(&state.first)
        || !model.same_shape(&state.second)
    {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len() + model.bias.len(),
            actual: grad.weights.len() + grad.bias.len(),
        });
    }
    if grad.weights.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { block: "weights" });
    }
    if grad.bias.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { block: "bias" });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);
    update_block(
        &mut model.weights,
        &mut state.first.weights,
        &mut state.second.weights,
        &grad.weights,
        hyper,
        lr,
        c1,
        c2,
    );
    update_block(
        &mut model.bias,
        &mut state.first.bias,
        &mut state.second.bias,
        &grad.bias,
        hyper,
        lr,
        c1,
        c2,
    );
    Ok(())
}
