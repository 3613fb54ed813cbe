//! Adam with optional global-norm gradient clipping.
//!
//! Moments are kept in bias-corrected form. With `r_t = (1 - beta) / (1 - beta^t)`
//! the corrected first moment follows `m_hat += r_t * (g - m_hat)`, which is
//! algebraically the textbook `m / (1 - beta1^t)`. Since `r_1 == 1.0` exactly,
//! the first step yields `m_hat == g` and `v_hat == g * g` bit for bit.

use thiserror::Error;

use crate::model::{Gradients, ModelParams};
use crate::numerics::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdamError {
    #[error("invalid Adam config: {0}")]
    BadConfig(String),
    #[error("tensor {index}: gradient/state shape {got:?} does not match parameter {expected:?}")]
    Shape {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Maximum global L2 norm of the gradient; 0 disables clipping.
    pub grad_clip: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            grad_clip: 5.0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), AdamError> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.grad_clip >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(AdamError::BadConfig(format!("{self:?}")))
        }
    }
}

/// Per-tensor moment estimates, in parameter declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    /// Bias-corrected first moment.
    pub m: Vec<Matrix>,
    /// Bias-corrected second moment.
    pub v: Vec<Matrix>,
    /// Steps taken so far.
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Matrix> = params
            .tensors()
            .iter()
            .map(|p| Matrix::zeros(p.rows(), p.cols()))
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    /// Factor the gradient was multiplied by (1.0 when not clipped).
    pub clip_scale: f64,
}

/// Scales `grads` in place so its global norm is at most `max_norm`.
/// Returns the pre-clip norm and the factor applied.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> (f64, f64) {
    let norm = grads.global_norm();
    if max_norm <= 0.0 || norm <= max_norm {
        return (norm, 1.0);
    }
    let scale = max_norm / norm;
    for t in grads.tensors_mut() {
        for x in t.data_mut() {
            *x *= scale;
        }
    }
    (norm, scale)
}

pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<StepReport, AdamError> {
    cfg.validate()?;
    let p_tensors = params.tensors_mut();
    let g_tensors = grads.tensors();
    if g_tensors.len() != p_tensors.len()
        || state.m.len() != p_tensors.len()
        || state.v.len() != p_tensors.len()
    {
        return Err(AdamError::Shape {
            index: 0,
            expected: (p_tensors.len(), 0),
            got: (g_tensors.len(), state.m.len()),
        });
    }
    for (index, p) in p_tensors.iter().enumerate() {
        for got in [g_tensors[index].shape(), state.m[index].shape(), state.v[index].shape()] {
            if got != p.shape() {
                return Err(AdamError::Shape {
                    index,
                    expected: p.shape(),
                    got,
                });
            }
        }
    }

    let norm = grads.global_norm();
    let clip_scale = if cfg.grad_clip > 0.0 && norm > cfg.grad_clip {
        cfg.grad_clip / norm
    } else {
        1.0
    };

    state.t += 1;
    let t = state.t as f64;
    let r1 = (1.0 - cfg.beta1) / (1.0 - cfg.beta1.powf(t));
    let r2 = (1.0 - cfg.beta2) / (1.0 - cfg.beta2.powf(t));

    for (index, p) in p_tensors.into_iter().enumerate() {
        let g = g_tensors[index].data();
        let m = state.m[index].data_mut();
        let v = state.v[index].data_mut();
        for (k, theta) in p.data_mut().iter_mut().enumerate() {
            let gk = if clip_scale == 1.0 { g[k] } else { g[k] * clip_scale };
            m[k] += r1 * (gk - m[k]);
            v[k] += r2 * (gk * gk - v[k]);
            *theta -= cfg.learning_rate * m[k] / (v[k].sqrt() + cfg.epsilon);
        }
    }
    Ok(StepReport {
        grad_norm: norm,
        clip_scale,
    })
}
