//! LARS optimizer and learning-rate rules.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// LARS hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LarsConfig {
    pub momentum: f32,
    pub weight_decay: f32,
    pub trust_coefficient: f32,
}

impl Default for LarsConfig {
    fn default() -> Self {
        LarsConfig {
            momentum: 0.9,
            weight_decay: 1e-6,
            trust_coefficient: 0.001,
        }
    }
}

/// Momentum buffers, one per parameter tensor, in `named_tensors` order.
#[derive(Debug, Clone, Default)]
pub struct LarsState {
    pub velocity: Vec<Vec<f32>>,
}

impl LarsState {
    pub fn for_shapes(lens: &[usize]) -> Self {
        LarsState {
            velocity: lens.iter().map(|&len| vec![0.0; len]).collect(),
        }
    }
}

/// One LARS update on a single tensor.
///
/// For matrix-shaped parameters: `g' = grad + wd * w`, a trust ratio
/// `local_lr = eta * ||w|| / ||g'||` (1 when either norm is zero), then
/// `v <- momentum * v + local_lr * lr * g'` and `w <- w - v`. Rank-1 tensors
/// (biases) skip weight decay and trust scaling, per the usual LARS handling
/// of non-matrix parameters.
pub fn lars_step(
    param: &mut Tensor,
    velocity: &mut [f32],
    grad: &[f32],
    lr: f32,
    config: &LarsConfig,
) -> Result<()> {
    if grad.len() != param.len() || velocity.len() != param.len() {
        return Err(Error::Shape(format!(
            "lars_step: param {} / grad {} / velocity {} lengths differ",
            param.len(),
            grad.len(),
            velocity.len()
        )));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerics("non-finite gradient; aborting step".into()));
    }
    let is_bias = param.shape().len() == 1;
    let wd = if is_bias { 0.0 } else { config.weight_decay };

    let mut w_norm_sq = 0.0f64;
    let mut g_norm_sq = 0.0f64;
    let w = param.values();
    for (wi, gi) in w.iter().zip(grad) {
        let g_adj = (gi + wd * wi) as f64;
        w_norm_sq += (*wi as f64) * (*wi as f64);
        g_norm_sq += g_adj * g_adj;
    }
    let local_lr = if !is_bias && w_norm_sq > 0.0 && g_norm_sq > 0.0 {
        config.trust_coefficient * (libm::sqrt(w_norm_sq) / libm::sqrt(g_norm_sq)) as f32
    } else {
        1.0
    };

    let step_scale = local_lr * lr;
    let values = param.values_mut();
    for ((wi, vi), gi) in values.iter_mut().zip(velocity).zip(grad) {
        let g_adj = gi + wd * *wi;
        *vi = config.momentum * *vi + step_scale * g_adj;
        *wi -= *vi;
    }
    Ok(())
}

/// Plain momentum SGD on one tensor (used by the supervised fine-tuning
/// stage, which does not use LARS).
pub fn momentum_sgd_step(
    param: &mut Tensor,
    velocity: &mut [f32],
    grad: &[f32],
    lr: f32,
    momentum: f32,
) -> Result<()> {
    if grad.len() != param.len() || velocity.len() != param.len() {
        return Err(Error::Shape("momentum step: length mismatch".into()));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerics("non-finite gradient; aborting step".into()));
    }
    for ((wi, vi), gi) in param.values_mut().iter_mut().zip(velocity).zip(grad) {
        *vi = momentum * *vi + lr * gi;
        *wi -= *vi;
    }
    Ok(())
}

/// Linear batch-size scaling of the base learning rate: `base * b / 128`.
pub fn scaled_lr(base_lr: f32, batch_size: usize) -> f32 {
    base_lr * batch_size as f32 / 128.0
}

/// Cosine annealing from `base` down to `0.01 * base` over `total_steps`.
pub fn cosine_lr(step: u64, total_steps: u64, base: f32) -> f32 {
    debug_assert!(step <= total_steps);
    if total_steps == 0 {
        return base;
    }
    let ratio = step as f64 / total_steps as f64;
    let cos = libm::cos(core::f64::consts::PI * ratio);
    (base as f64 * (0.01 + 0.99 * 0.5 * (1.0 + cos))) as f32
}
