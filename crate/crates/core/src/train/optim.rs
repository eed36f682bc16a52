use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{AdaptationModel, ParameterGradients};

/// SGD hyperparameters. Defaults: momentum 0.9,
/// weight decay 1e-4, initial rate 1e-5 decayed by 0.1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr0: f64,
    pub decay_factor: f64,
    pub decay_every: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            momentum: 0.9,
            weight_decay: 1e-4,
            lr0: 1e-5,
            decay_factor: 0.1,
            decay_every: 3,
        }
    }
}

/// Step decay: `lr0 * decay_factor ^ floor(completed_epochs / decay_every)`.
pub fn lr_schedule(hyper: &Hyper, completed_epochs: usize) -> f64 {
    let decays = completed_epochs / hyper.decay_every.max(1);
    hyper.lr0 * hyper.decay_factor.powi(decays as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// One buffer per parameter tensor, in [`AdaptationModel::params`] order.
    pub momentum_buffers: Vec<Vec<f64>>,
    pub lr: f64,
    pub step_count: u64,
    pub hyper: Hyper,
}

impl OptimizerState {
    pub fn new(model: &AdaptationModel, hyper: Hyper) -> Self {
        OptimizerState {
            momentum_buffers: model.params().iter().map(|p| vec![0.0; p.len()]).collect(),
            lr: hyper.lr0,
            step_count: 0,
            hyper,
        }
    }

    pub fn set_epoch(&mut self, completed_epochs: usize) {
        self.lr = lr_schedule(&self.hyper, completed_epochs);
    }
}

/// `g' = g + wd*w; v = mu*v + g'; w = w - lr*v` for every parameter.
pub fn sgd_step(
    model: &mut AdaptationModel,
    grads: &ParameterGradients,
    state: &mut OptimizerState,
) -> Result<()> {
    let grad_params = grads.params();
    let params = model.params_mut();
    if params.len() != grad_params.len() || params.len() != state.momentum_buffers.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} parameters, {} gradients, {} momentum buffers",
            params.len(),
            grad_params.len(),
            state.momentum_buffers.len()
        )));
    }
    for ((w, g), v) in params.iter().zip(&grad_params).zip(&state.momentum_buffers) {
        if w.len() != g.len() || w.len() != v.len() {
            return Err(Error::ShapeMismatch(format!(
                "parameter of {} values, gradient of {}, buffer of {}",
                w.len(),
                g.len(),
                v.len()
            )));
        }
    }
    let Hyper {
        momentum,
        weight_decay,
        ..
    } = state.hyper;
    let lr = state.lr;
    for ((w, g), v) in params.into_iter().zip(grad_params).zip(&mut state.momentum_buffers) {
        for ((w, &g), v) in w.iter_mut().zip(g).zip(v.iter_mut()) {
            let g = g + weight_decay * *w;
            *v = momentum * *v + g;
            *w -= lr * *v;
        }
    }
    state.step_count += 1;
    if !model.is_finite() {
        return Err(Error::NonFinite("sgd_step"));
    }
    Ok(())
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_global_norm(grads: &mut ParameterGradients, max_norm: f64) -> f64 {
    let norm = grads.norm_sq().sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        for p in grads.params_mut() {
            p.iter_mut().for_each(|v| *v *= k);
        }
    }
    norm
}
