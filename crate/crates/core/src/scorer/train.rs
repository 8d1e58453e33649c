use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamHyper, AdamState};
use super::features::{featurize, FeatureVector};
use super::loss::accumulate_gradient;
use super::model::{argmax, predict_scores, ModelParams};
use super::schedule;
use crate::error::{Error, Result};
use crate::ontology::{ClassInventory, LabeledExample, SplitAssignment};

pub const DEFAULT_DIM: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub peak_lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_fraction: f64,
    pub dropout: f64,
    pub adam: AdamHyper,
    pub dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 2.0,
            peak_lr: 1e-5,
            batch_size: 10,
            epochs: 15,
            warmup_fraction: 1.0 / 15.0,
            dropout: 0.5,
            adam: AdamHyper::default(),
            dim: DEFAULT_DIM,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma {} must be >= 0", self.gamma));
        }
        if !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0) {
            return bad(format!(
                "warmup fraction {} must be in (0, 1)",
                self.warmup_fraction
            ));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} must be in [0, 1)", self.dropout));
        }
        if !(self.peak_lr >= 0.0 && self.peak_lr.is_finite()) {
            return bad(format!("peak learning rate {} must be >= 0", self.peak_lr));
        }
        if self.dim < 2 || self.dim > u32::MAX as usize {
            return bad(format!("feature dimension {} out of range", self.dim));
        }
        Ok(())
    }

    pub fn lr_at(&self, step: u64, total_steps: u64) -> f64 {
        schedule::lr_at(step, total_steps, self.peak_lr, self.warmup_fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_train_loss: f64,
    /// Fraction of dev examples whose argmax class is the gold class.
    pub dev_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelParams,
    pub epochs: Vec<EpochLog>,
    pub total_steps: u64,
    pub clamp_events: usize,
}

struct Encoded {
    x: FeatureVector,
    gold: usize,
}

fn encode(
    examples: &[LabeledExample],
    ids: &[usize],
    inventory: &ClassInventory,
    dim: usize,
) -> Result<Vec<Encoded>> {
    ids.iter()
        .map(|&i| {
            let e = examples.get(i).ok_or_else(|| {
                Error::Invalid(format!(
                    "split index {i} outside {} examples",
                    examples.len()
                ))
            })?;
            let gold = inventory
                .index_of(&e.gold_class)
                .ok_or_else(|| Error::UnknownClass(e.gold_class.clone()))?;
            Ok(Encoded {
                x: featurize(&e.sentence, e.target_position, &e.target_lemma, dim)?,
                gold,
            })
        })
        .collect()
}

fn accuracy(model: &ModelParams, data: &[Encoded]) -> Result<Option<f64>> {
    if data.is_empty() {
        return Ok(None);
    }
    let mut hits = 0usize;
    for e in data {
        if argmax(&predict_scores(model, &e.x)?) == e.gold {
            hits += 1;
        }
    }
    Ok(Some(hits as f64 / data.len() as f64))
}

/// Argmax accuracy of `model` on the given example indices.
pub fn evaluate(
    model: &ModelParams,
    examples: &[LabeledExample],
    ids: &[usize],
    inventory: &ClassInventory,
) -> Result<Option<f64>> {
    accuracy(model, &encode(examples, ids, inventory, model.dim)?)
}

/// Trains the K-head scorer on the split's train part, reporting dev accuracy
/// after each epoch. Fully determined by `config.seed`.
pub fn train(
    examples: &[LabeledExample],
    split: &SplitAssignment,
    inventory: &ClassInventory,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if inventory.len() < 2 {
        return Err(Error::Invalid(format!(
            "training needs at least 2 classes, inventory has {}",
            inventory.len()
        )));
    }
    if split.train.is_empty() {
        return Err(Error::Invalid("empty training split".into()));
    }
    let train_set = encode(examples, &split.train, inventory, config.dim)?;
    let dev_set = encode(examples, &split.dev, inventory, config.dim)?;

    let mut model = ModelParams::init(inventory.len(), config.dim, config.seed);
    let mut adam = AdamState::new(&model);
    let mut grad = ModelParams::zeros(model.num_classes, model.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));

    let steps_per_epoch = train_set.len().div_ceil(config.batch_size) as u64;
    let total_steps = steps_per_epoch * config.epochs as u64;
    let keep = 1.0 - config.dropout;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut step = 0u64;
    let mut clamp_events = 0usize;
    let mut logs = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.fill_zero();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let e = &train_set[i];
                let x = if config.dropout > 0.0 {
                    e.x.map_values(|_, v| {
                        if rng.random::<f64>() < keep {
                            v / keep
                        } else {
                            0.0
                        }
                    })
                } else {
                    e.x.clone()
                };
                let loss = accumulate_gradient(&model, &x, e.gold, config.gamma, scale, &mut grad)?;
                loss_sum += loss.value;
                clamp_events += loss.clamp_events;
            }
            let lr = config.lr_at(step, total_steps);
            adam_step(&mut model, &mut adam, &grad, lr, &config.adam)?;
            step += 1;
        }
        let dev_accuracy = accuracy(&model, &dev_set)?;
        let mean_train_loss = loss_sum / train_set.len() as f64;
        log::info!(
            "epoch {epoch}/{}: train loss {mean_train_loss:.6}, dev accuracy {}",
            config.epochs,
            dev_accuracy.map_or("n/a".to_string(), |a| format!("{a:.4}"))
        );
        logs.push(EpochLog {
            epoch,
            mean_train_loss,
            dev_accuracy,
        });
    }

    Ok(TrainOutcome {
        model,
        epochs: logs,
        total_steps,
        clamp_events,
    })
}
