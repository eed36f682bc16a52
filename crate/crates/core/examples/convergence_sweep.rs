//! Trains both variants for 200 windows on seeds 7, 8 and 9 and prints the
//! full-dataset BCE before and after.
//!
//! `cargo run --release -p tempsal-core --example convergence_sweep -- [lag] [hidden] [lr] [clip]`
//! (defaults: 2 8 0.1 16)

use tempsal_core::data::{synth_video, SynthConfig};
use tempsal_core::net::{AdaptationModel, Variant};
use tempsal_core::train::{dataset_loss, train, Hyper, TrainConfig};

fn arg<T: std::str::FromStr>(args: &[String], i: usize, default: T) -> T {
    args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lag: usize = arg(&args, 1, 2);
    let hidden: usize = arg(&args, 2, 8);
    let lr: f64 = arg(&args, 3, 0.1);
    let clip: usize = arg(&args, 4, 16);
    for seed in [7u64, 8, 9] {
        let cfg = SynthConfig { seed, lag, ..SynthConfig::default() };
        let data: Vec<_> = (0..cfg.videos).map(|i| synth_video(&cfg, i).unwrap().to_sample()).collect();
        for variant in [Variant::ConvOnly, Variant::ConvLstm] {
            let t0 = std::time::Instant::now();
            let m = AdaptationModel::init(variant, hidden, seed);
            let l0 = dataset_loss(&m, &data, clip).unwrap();
            let tc = TrainConfig { epochs: 1000, clip_length: clip, seed, max_steps: Some(200),
                hyper: Hyper { lr0: lr, decay_every: 1000, ..Hyper::default() }, ..TrainConfig::default() };
            let out = train(m, &data, &tc).unwrap();
            let l1 = dataset_loss(&out.model, &data, clip).unwrap();
            println!("seed {seed} {variant}: {l0:.4} -> {l1:.4} ratio {:.3} ({:.1}s)", l1 / l0, t0.elapsed().as_secs_f64());
        }
    }
}
