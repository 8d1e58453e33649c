//! Linear warm-up from zero to the peak rate, then cosine decay to zero.

use std::f64::consts::PI;

/// Number of warm-up steps: `round(warmup_fraction * total_steps)`, kept
/// inside `[1, total_steps - 1]` so both phases exist whenever `total_steps >= 2`.
pub fn warmup_steps(total_steps: u64, warmup_fraction: f64) -> u64 {
    let w = (warmup_fraction * total_steps as f64).round() as u64;
    w.clamp(1, total_steps.saturating_sub(1).max(1))
}

/// Learning rate at a real-valued position in `[0, total_steps]`.
pub fn lr_at_position(position: f64, total_steps: u64, peak_lr: f64, warmup_fraction: f64) -> f64 {
    let total = total_steps.max(1) as f64;
    if position <= 0.0 || position >= total {
        return 0.0;
    }
    let w = warmup_steps(total_steps.max(1), warmup_fraction) as f64;
    if position < w {
        peak_lr * position / w
    } else {
        let t = (position - w) / (total - w);
        peak_lr * 0.5 * (1.0 + (PI * t).cos())
    }
}

pub fn lr_at(step: u64, total_steps: u64, peak_lr: f64, warmup_fraction: f64) -> f64 {
    lr_at_position(step as f64, total_steps, peak_lr, warmup_fraction)
}
