use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use tempsal_core::data::Dataset;
use tempsal_core::net::{AdaptationModel, Variant, DEFAULT_HIDDEN};
use tempsal_core::train::{history_csv, save_checkpoint, train_with_progress, Hyper, TrainConfig};
use tempsal_core::{Error, Result};

use crate::config::{log_resolved, required};

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// conv | convlstm
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub clip_length: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checkpoint path, rewritten after every epoch.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Loss history CSV (default: checkpoint path with a .loss.csv extension).
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub decay_every: Option<usize>,
    /// Global gradient-norm cap; 0 disables clipping.
    #[arg(long)]
    pub grad_clip: Option<f64>,
    /// Stop after this many optimizer steps.
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Serialize)]
struct Resolved<'a> {
    manifest: &'a PathBuf,
    variant: Variant,
    hidden: usize,
    loss_csv: &'a PathBuf,
    train: &'a TrainConfig,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let manifest = required(args.manifest, "manifest")?;
    let ckpt = required(args.ckpt, "ckpt")?;
    let variant: Variant = required(args.variant, "variant")?.parse()?;
    let hidden = args.hidden.unwrap_or(DEFAULT_HIDDEN);
    if hidden == 0 || hidden > u16::MAX as usize {
        return Err(Error::Config(format!("hidden must be in 1..={}", u16::MAX)));
    }
    let d = TrainConfig::default();
    let h = Hyper::default();
    let config = TrainConfig {
        epochs: args.epochs.unwrap_or(d.epochs),
        clip_length: args.clip_length.unwrap_or(d.clip_length),
        seed: args.seed.unwrap_or(d.seed),
        hyper: Hyper {
            lr0: args.lr.unwrap_or(h.lr0),
            momentum: args.momentum.unwrap_or(h.momentum),
            weight_decay: args.weight_decay.unwrap_or(h.weight_decay),
            decay_every: args.decay_every.unwrap_or(h.decay_every),
            ..h
        },
        grad_clip: match args.grad_clip {
            Some(c) if c <= 0.0 => None,
            Some(c) => Some(c),
            None => d.grad_clip,
        },
        max_steps: args.max_steps,
        checkpoint_path: Some(ckpt.clone()),
    };
    let loss_csv = args.loss_csv.unwrap_or_else(|| ckpt.with_extension("loss.csv"));
    log_resolved(
        "train",
        &Resolved { manifest: &manifest, variant, hidden, loss_csv: &loss_csv, train: &config },
    );

    let ds = Dataset::load(&manifest)?;
    let samples: Vec<_> = ds.load_all()?.iter().map(|v| v.to_sample()).collect();
    let model = AdaptationModel::init(variant, hidden, config.seed);
    let mut last_epoch = None;
    let mut epoch_sum = (0.0, 0usize);
    let outcome = train_with_progress(model, &samples, &config, |w| {
        if last_epoch != Some(w.epoch) {
            if let Some(e) = last_epoch {
                eprintln!("epoch {e}: mean window loss {:.6}", epoch_sum.0 / epoch_sum.1 as f64);
            }
            last_epoch = Some(w.epoch);
            epoch_sum = (0.0, 0);
        }
        epoch_sum.0 += w.loss;
        epoch_sum.1 += 1;
    })?;
    if let Some(e) = last_epoch {
        eprintln!("epoch {e}: mean window loss {:.6}", epoch_sum.0 / epoch_sum.1 as f64);
    }
    // The trainer saves per epoch; saving again guarantees the file exists
    // and holds the final state.
    save_checkpoint(&outcome.model, Some(&outcome.optimizer), &ckpt)?;
    fs::write(&loss_csv, history_csv(&outcome.history)).map_err(|e| Error::Io { path: loss_csv.clone(), source: e })?;
    eprintln!("{} steps; checkpoint {}; losses {}", outcome.history.len(), ckpt.display(), loss_csv.display());
    Ok(())
}
