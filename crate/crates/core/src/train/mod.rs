//! Training recipe: per-pixel BCE against ground-truth maps, momentum SGD with
//! weight decay and step learning-rate decay, truncated BPTT over fixed-length
//! windows, per-epoch checkpoints.

mod checkpoint;
mod loss;
mod optim;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, load_checkpoint_as, save_checkpoint,
    Checkpoint, MAGIC, VERSION,
};
pub use loss::{bce_loss, PROB_EPS};
pub use optim::{clip_global_norm, lr_schedule, sgd_step, Hyper, OptimizerState};

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{backward_sequence, forward_sequence, AdaptationModel};
use crate::tensor::Tensor4;

/// One training video: static maps and their ground-truth targets.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub inputs: Vec<Tensor4>,
    pub targets: Vec<Tensor4>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Frames per BPTT window; the LSTM state resets at each window.
    pub clip_length: usize,
    pub seed: u64,
    pub hyper: Hyper,
    /// Global gradient-norm cap applied before each step.
    pub grad_clip: Option<f64>,
    /// Stop after this many optimizer steps, even mid-epoch.
    pub max_steps: Option<usize>,
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1,
            clip_length: 16,
            seed: 0,
            hyper: Hyper::default(),
            grad_clip: Some(10.0),
            max_steps: None,
            checkpoint_path: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.clip_length == 0 {
            return Err(Error::Config("clip_length must be at least 1".into()));
        }
        if self.hyper.decay_every == 0 {
            return Err(Error::Config("decay_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Loss of one optimizer step, averaged over the window's frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowLoss {
    pub step: usize,
    pub epoch: usize,
    pub video: String,
    pub start: usize,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: AdaptationModel,
    pub optimizer: OptimizerState,
    pub history: Vec<WindowLoss>,
}

/// Summed BCE over a window and the matching output gradients.
fn window_loss(outputs: &[Tensor4], targets: &[Tensor4]) -> Result<(f64, Vec<Tensor4>)> {
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(outputs.len());
    for (y, t) in outputs.iter().zip(targets) {
        let (l, g) = bce_loss(y, t)?;
        total += l;
        grads.push(g);
    }
    Ok((total, grads))
}

fn check_sample(sample: &Sample) -> Result<()> {
    if sample.inputs.len() != sample.targets.len() {
        return Err(Error::LengthMismatch(format!(
            "video '{}' has {} inputs and {} targets",
            sample.id,
            sample.inputs.len(),
            sample.targets.len()
        )));
    }
    if sample.inputs.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(())
}

fn windows(len: usize, clip: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len).step_by(clip).map(move |s| (s, (s + clip).min(len)))
}

/// One SGD step on a single window; returns the window's summed loss.
pub fn train_window(
    model: &mut AdaptationModel,
    optimizer: &mut OptimizerState,
    inputs: &[Tensor4],
    targets: &[Tensor4],
    grad_clip: Option<f64>,
) -> Result<f64> {
    let (outputs, cache) = forward_sequence(inputs, model)?;
    let (loss, grad_out) = window_loss(&outputs, targets)?;
    let mut grads = backward_sequence(model, &cache, &grad_out)?;
    if let Some(max) = grad_clip {
        clip_global_norm(&mut grads, max);
    }
    sgd_step(model, &grads, optimizer)?;
    Ok(loss)
}

/// Trains `model`. Order: epochs, then videos in a seeded shuffled
/// order, then consecutive windows of `clip_length` frames.
pub fn train(model: AdaptationModel, dataset: &[Sample], config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(model, dataset, config, |_| {})
}

pub fn train_with_progress(
    mut model: AdaptationModel,
    dataset: &[Sample],
    config: &TrainConfig,
    mut on_step: impl FnMut(&WindowLoss),
) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    dataset.iter().try_for_each(check_sample)?;

    let mut optimizer = OptimizerState::new(&model, config.hyper);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::new();
    let limit = config.max_steps.unwrap_or(usize::MAX);

    'epochs: for epoch in 0..config.epochs {
        optimizer.set_epoch(epoch);
        order.shuffle(&mut rng);
        for &vi in &order {
            let sample = &dataset[vi];
            for (start, end) in windows(sample.inputs.len(), config.clip_length) {
                if history.len() >= limit {
                    break 'epochs;
                }
                let loss = train_window(
                    &mut model,
                    &mut optimizer,
                    &sample.inputs[start..end],
                    &sample.targets[start..end],
                    config.grad_clip,
                )
                .map_err(|e| Error::Training {
                    video: sample.id.clone(),
                    start,
                    source: Box::new(e),
                })?;
                let record = WindowLoss {
                    step: history.len(),
                    epoch,
                    video: sample.id.clone(),
                    start,
                    loss: loss / (end - start) as f64,
                };
                on_step(&record);
                history.push(record);
            }
        }
        if let Some(path) = &config.checkpoint_path {
            save_checkpoint(&model, Some(&optimizer), path)?;
        }
    }
    if history.len() >= limit {
        if let Some(path) = &config.checkpoint_path {
            save_checkpoint(&model, Some(&optimizer), path)?;
        }
    }
    Ok(TrainOutcome {
        model,
        optimizer,
        history,
    })
}

/// Mean per-frame BCE of `model` over the whole dataset, evaluated with the
/// same windowing as training but without updating anything.
pub fn dataset_loss(model: &AdaptationModel, dataset: &[Sample], clip_length: usize) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut total, mut frames) = (0.0, 0usize);
    for sample in dataset {
        check_sample(sample)?;
        for (start, end) in windows(sample.inputs.len(), clip_length.max(1)) {
            let (outputs, _) = forward_sequence(&sample.inputs[start..end], model)?;
            total += window_loss(&outputs, &sample.targets[start..end])?.0;
            frames += end - start;
        }
    }
    Ok(total / frames as f64)
}

/// Loss history as `step,loss` CSV with a header line.
pub fn history_csv(history: &[WindowLoss]) -> String {
    let mut out = String::from("step,loss\n");
    for h in history {
        out.push_str(&format!("{},{:.17e}\n", h.step, h.loss));
    }
    out
}
