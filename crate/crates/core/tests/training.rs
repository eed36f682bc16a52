use std::fs;

use proptest::prelude::*;
use tempsal_core::data::{synth_video, SynthConfig};
use tempsal_core::net::{AdaptationModel, Variant};
use tempsal_core::train::{
    decode_checkpoint, encode_checkpoint, history_csv, load_checkpoint, load_checkpoint_as,
    lr_schedule, save_checkpoint, sgd_step, train, Hyper, OptimizerState, Sample, TrainConfig,
};
use tempsal_core::Error;

fn tiny_dataset(videos: usize, frames: usize, seed: u64) -> Vec<Sample> {
    let cfg = SynthConfig { videos, frames, height: 10, width: 10, seed, ..SynthConfig::default() };
    (0..videos).map(|i| synth_video(&cfg, i).unwrap().to_sample()).collect()
}

fn fast(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 2,
        clip_length: 4,
        seed,
        hyper: Hyper { lr0: 0.05, decay_every: 100, ..Hyper::default() },
        ..TrainConfig::default()
    }
}

#[test]
fn one_video_one_window_is_one_step() {
    let data = tiny_dataset(1, 5, 1);
    let cfg = TrainConfig { epochs: 1, clip_length: 16, ..TrainConfig::default() };
    let out = train(AdaptationModel::init(Variant::ConvLstm, 3, 1), &data, &cfg).unwrap();
    assert_eq!(out.history.len(), 1);
    assert_eq!(out.optimizer.step_count, 1);
}

#[test]
fn windows_cover_every_frame() {
    let data = tiny_dataset(3, 10, 2);
    let cfg = TrainConfig { epochs: 2, clip_length: 4, ..TrainConfig::default() };
    let out = train(AdaptationModel::init(Variant::ConvOnly, 3, 1), &data, &cfg).unwrap();
    // ceil(10 / 4) windows per video, 3 videos, 2 epochs.
    assert_eq!(out.history.len(), 3 * 3 * 2);
    let starts: Vec<usize> = out.history.iter().filter(|h| h.epoch == 0 && h.video == "synth01").map(|h| h.start).collect();
    assert_eq!(starts, vec![0, 4, 8]);
}

#[test]
fn same_seed_gives_bit_identical_checkpoints_and_histories() {
    let data = tiny_dataset(2, 8, 3);
    for variant in [Variant::ConvOnly, Variant::ConvLstm] {
        let dir = tempfile::tempdir().unwrap();
        let run = |name: &str| {
            let path = dir.path().join(name);
            let cfg = TrainConfig { checkpoint_path: Some(path.clone()), ..fast(9) };
            let out = train(AdaptationModel::init(variant, 3, 9), &data, &cfg).unwrap();
            (fs::read(path).unwrap(), history_csv(&out.history))
        };
        let (a, b) = (run("a.ckpt"), run("b.ckpt"));
        assert_eq!(a, b);
        let other = {
            let cfg = fast(10);
            history_csv(&train(AdaptationModel::init(variant, 3, 9), &data, &cfg).unwrap().history)
        };
        assert_ne!(a.1, other, "the seed must change the data order");
    }
}

#[test]
fn checkpoint_round_trip_is_exact_at_single_precision() {
    let data = tiny_dataset(1, 6, 4);
    let out = train(AdaptationModel::init(Variant::ConvLstm, 4, 4), &data, &fast(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&out.model, Some(&out.optimizer), &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    for (a, b) in out.model.params().iter().zip(back.model.params()) {
        for (x, y) in a.iter().zip(b) {
            assert_eq!(*x as f32 as f64, *y);
        }
    }
    for (a, b) in out.optimizer.momentum_buffers.iter().zip(back.momentum.as_ref().unwrap()) {
        for (x, y) in a.iter().zip(b) {
            assert_eq!(*x as f32 as f64, *y);
        }
    }
    // A reloaded model re-encodes to the same bytes.
    assert_eq!(encode_checkpoint(&back.model, None), encode_checkpoint(&out.model, None));
    assert!(!dir.path().join("m.ckpt.tmp").exists());
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let m = AdaptationModel::init(Variant::ConvOnly, 3, 1);
    let bytes = encode_checkpoint(&m, None);
    for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(Error::CorruptCheckpoint(_))), "cut {cut}");
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_checkpoint(&bad), Err(Error::CorruptCheckpoint(_))));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("conv.ckpt");
    save_checkpoint(&m, None, &path).unwrap();
    match load_checkpoint_as(&path, Variant::ConvLstm) {
        Err(Error::CorruptCheckpoint(msg)) => assert!(msg.contains("variant mismatch")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn momentum_coasts_geometrically_without_gradients() {
    let mut m = AdaptationModel::init(Variant::ConvOnly, 2, 6);
    let zero = m.zeros_like();
    let hyper = Hyper { weight_decay: 0.0, lr0: 0.01, ..Hyper::default() };
    let mut opt = OptimizerState::new(&m, hyper);
    // Seed the buffers with v0 and measure each step's displacement.
    let v0: Vec<Vec<f64>> = m.params().iter().map(|p| p.iter().enumerate().map(|(i, _)| (i as f64 * 0.37).sin()).collect()).collect();
    opt.momentum_buffers = v0.clone();
    let v0_norm = v0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    for k in 1..=10 {
        let before: Vec<f64> = m.params().concat();
        sgd_step(&mut m, &zero, &mut opt).unwrap();
        let after: Vec<f64> = m.params().concat();
        let step = before.iter().zip(&after).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let expected = 0.9f64.powi(k) * 0.01 * v0_norm;
        assert!((step - expected).abs() <= 1e-12, "step {k}: {step} vs {expected}");
    }
}

#[test]
fn empty_dataset_and_bad_windows_are_errors() {
    let m = AdaptationModel::init(Variant::ConvOnly, 2, 1);
    assert!(matches!(train(m.clone(), &[], &TrainConfig::default()), Err(Error::EmptyDataset)));
    let mut data = tiny_dataset(1, 4, 1);
    data[0].targets.pop();
    assert!(matches!(train(m, &data, &TrainConfig::default()), Err(Error::LengthMismatch(_))));
}

#[test]
fn failing_window_is_identified() {
    let m = AdaptationModel::init(Variant::ConvOnly, 2, 1);
    let mut data = tiny_dataset(1, 8, 1);
    let bad = tempsal_core::tensor::Tensor4::zeros(tempsal_core::tensor::Shape::new(1, 1, 3, 3));
    data[0].targets[5] = bad;
    match train(m, &data, &TrainConfig { clip_length: 4, ..TrainConfig::default() }) {
        Err(Error::Training { video, start, .. }) => {
            assert_eq!(video, "synth00");
            assert_eq!(start, 4);
        }
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #[test]
    fn lr_schedule_is_non_increasing_and_piecewise_constant(every in 1usize..6, epochs in 1usize..30) {
        let h = Hyper { decay_every: every, ..Hyper::default() };
        for e in 0..epochs {
            prop_assert!(lr_schedule(&h, e + 1) <= lr_schedule(&h, e));
            if (e + 1) % every != 0 {
                prop_assert_eq!(lr_schedule(&h, e + 1), lr_schedule(&h, e));
            }
        }
    }

    #[test]
    fn one_step_moves_each_parameter_at_most_lr_times_max_velocity(seed in 0u64..200) {
        let mut m = AdaptationModel::init(Variant::ConvOnly, 2, seed);
        let mut g = m.zeros_like();
        for (k, p) in g.params_mut().into_iter().enumerate() {
            p.iter_mut().enumerate().for_each(|(i, v)| *v = ((seed + k as u64 * 7 + i as u64) as f64).cos());
        }
        let mut opt = OptimizerState::new(&m, Hyper::default());
        let before: Vec<f64> = m.params().concat();
        sgd_step(&mut m, &g, &mut opt).unwrap();
        let vmax = opt.momentum_buffers.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in before.iter().zip(m.params().concat()) {
            prop_assert!((a - b).abs() <= opt.lr * vmax + 4.0 * f64::EPSILON * a.abs());
        }
    }
}
