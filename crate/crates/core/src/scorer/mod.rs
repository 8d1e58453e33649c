//! Open-set multi-label scorer: K independent sigmoid heads over hashed
//! context features, trained with focal binary cross entropy and Adam under a
//! warm-up/cosine schedule.

pub mod adam;
pub mod checkpoint;
pub mod features;
pub mod loss;
pub mod model;
pub mod schedule;
pub mod train;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::Checkpoint;
pub use features::{featurize, FeatureVector, CONTEXT_WINDOW};
pub use loss::{focal_bce_loss, logit_gradient, loss_gradient, FocalLoss};
pub use model::{argmax, predict_scores, sigmoid, Gradient, ModelParams};
pub use schedule::{lr_at, lr_at_position, warmup_steps};
pub use train::{evaluate, train, EpochLog, TrainConfig, TrainOutcome};
