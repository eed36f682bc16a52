use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use tempsal_core::data::{generate_synthetic, SynthConfig};
use tempsal_core::Result;

use crate::config::{log_resolved, required};

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateArgs {
    /// Output directory; receives manifest.json and one folder per video.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub videos: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ground truth at frame t shows the blob at t + lag.
    #[arg(long)]
    pub lag: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Serialize)]
struct Resolved<'a> {
    out: &'a PathBuf,
    synth: &'a SynthConfig,
}

pub fn run(args: GenerateArgs) -> Result<()> {
    let out = required(args.out, "out")?;
    let d = SynthConfig::default();
    let synth = SynthConfig {
        videos: args.videos.unwrap_or(d.videos),
        frames: args.frames.unwrap_or(d.frames),
        height: args.height.unwrap_or(d.height),
        width: args.width.unwrap_or(d.width),
        seed: args.seed.unwrap_or(d.seed),
        lag: args.lag.unwrap_or(d.lag),
        noise: args.noise.unwrap_or(d.noise),
        ..d
    };
    log_resolved("generate", &Resolved { out: &out, synth: &synth });
    let ds = generate_synthetic(&synth, &out)?;
    eprintln!(
        "wrote {} videos x {} frames to {}",
        ds.manifest.videos.len(),
        synth.frames,
        out.display()
    );
    Ok(())
}
