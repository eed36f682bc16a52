use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tempsal_core::data::{frame_file_name, write_map, Dataset, VideoRecord};
use tempsal_core::metrics::SaliencyMap;
use tempsal_core::net::{conv_block_forward, convlstm_step, AdaptationModel, LstmState, Variant};
use tempsal_core::train::load_checkpoint;
use tempsal_core::Result;

use crate::config::{log_resolved, required};

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output directory; maps go to <out>/<video_id>/<frame>.pgm.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Resolved<'a> {
    manifest: &'a PathBuf,
    checkpoint: &'a PathBuf,
    out: &'a PathBuf,
    threads: usize,
}

/// Runs the model over one video from a fresh state and writes every frame.
fn predict_video(ds: &Dataset, video: &VideoRecord, model: &AdaptationModel, out: &Path) -> Result<usize> {
    let statics = ds.load_maps(&video.static_map_dir, &video.frames)?;
    let (h, w) = ds.resolution();
    let mut state = LstmState::zeros(model.hidden, h, w);
    let dir = out.join(&video.video_id);
    for (map, &frame) in statics.iter().zip(&video.frames) {
        let x = map.to_tensor();
        let y = match model.variant {
            Variant::ConvOnly => conv_block_forward(&x, model)?,
            Variant::ConvLstm => {
                let (y, next) = convlstm_step(&x, &state, model)?;
                state = next;
                y
            }
        };
        write_map(&SaliencyMap::from_tensor(&y)?, &dir.join(frame_file_name(frame)))?;
    }
    Ok(statics.len())
}

pub fn run(args: PredictArgs) -> Result<()> {
    let manifest = required(args.manifest, "manifest")?;
    let checkpoint = required(args.checkpoint, "checkpoint")?;
    let out = required(args.out, "out")?;
    log_resolved(
        "predict",
        &Resolved { manifest: &manifest, checkpoint: &checkpoint, out: &out, threads: rayon::current_num_threads() },
    );
    let model = load_checkpoint(&checkpoint)?.model;
    let ds = Dataset::load(&manifest)?;
    // Each video writes only inside its own output folder.
    let written = ds
        .manifest
        .videos
        .par_iter()
        .map(|v| predict_video(&ds, v, &model, &out))
        .collect::<Result<Vec<usize>>>()?;
    eprintln!(
        "{} model: wrote {} maps for {} videos to {}",
        model.variant.name(),
        written.iter().sum::<usize>(),
        written.len(),
        out.display()
    );
    Ok(())
}
