use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempsal_core::data::{generate_synthetic, Dataset, SynthConfig};
use tempsal_core::metrics::EvalReport;
use tempsal_core::net::{AdaptationModel, Variant};
use tempsal_core::train::save_checkpoint;

fn tempsal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempsal")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tempsal(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn dataset(dir: &Path) -> (PathBuf, Dataset) {
    let cfg = SynthConfig { videos: 3, frames: 5, height: 12, width: 12, ..SynthConfig::default() };
    let ds = generate_synthetic(&cfg, &dir.join("data")).unwrap();
    (dir.join("data/manifest.json"), ds)
}

/// Copies every ground-truth map into a prediction tree.
fn copy_gt(ds: &Dataset, pred: &Path) {
    for v in &ds.manifest.videos {
        fs::create_dir_all(pred.join(&v.video_id)).unwrap();
        for &f in &v.frames {
            let src = ds.frame_path(&v.gt_map_dir, f);
            fs::copy(&src, pred.join(&v.video_id).join(src.file_name().unwrap())).unwrap();
        }
    }
}

#[test]
fn zero_model_writes_byte_128_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, ds) = dataset(dir.path());
    for variant in [Variant::ConvOnly, Variant::ConvLstm] {
        let ckpt = dir.path().join(format!("{}.ckpt", variant.name()));
        save_checkpoint(&AdaptationModel::zeros(variant, 3), None, &ckpt).unwrap();
        let out = dir.path().join(format!("pred-{}", variant.name()));
        ok(&["predict", "--manifest", s(&manifest), "--checkpoint", s(&ckpt), "--out", s(&out)]);
        for v in &ds.manifest.videos {
            let files = fs::read_dir(out.join(&v.video_id)).unwrap().count();
            assert_eq!(files, v.frames.len());
            for &f in &v.frames {
                let bytes = fs::read(ds.frame_path(&out.join(&v.video_id), f)).unwrap();
                let header = b"P5\n12 12\n255\n";
                assert_eq!(&bytes[..header.len()], header);
                assert!(bytes[header.len()..].iter().all(|&b| b == 128));
            }
        }
    }
}

#[test]
fn conv_model_maps_duplicate_frames_to_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, ds) = dataset(dir.path());
    let v = &ds.manifest.videos[0];
    fs::copy(ds.frame_path(&v.static_map_dir, 0), ds.frame_path(&v.static_map_dir, 3)).unwrap();
    let ckpt = dir.path().join("conv.ckpt");
    save_checkpoint(&AdaptationModel::init(Variant::ConvOnly, 4, 1), None, &ckpt).unwrap();
    let out = dir.path().join("pred");
    ok(&["predict", "--manifest", s(&manifest), "--checkpoint", s(&ckpt), "--out", s(&out)]);
    let read = |f| fs::read(ds.frame_path(&out.join(&v.video_id), f)).unwrap();
    assert_eq!(read(0), read(3));
    assert_ne!(read(0), read(1));
}

#[test]
fn variant_byte_follows_the_flag_and_training_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = dataset(dir.path());
    for (variant, code) in [("conv", 0u8), ("convlstm", 1u8)] {
        let run = |name: &str| {
            let ckpt = dir.path().join(name);
            ok(&[
                "train", "--manifest", s(&manifest), "--variant", variant, "--hidden", "3", "--epochs", "2",
                "--clip-length", "2", "--seed", "5", "--lr", "0.05", "--ckpt", s(&ckpt),
            ]);
            (fs::read(&ckpt).unwrap(), fs::read_to_string(ckpt.with_extension("loss.csv")).unwrap())
        };
        let (a, b) = (run(&format!("{variant}-a.ckpt")), run(&format!("{variant}-b.ckpt")));
        assert_eq!(&a.0[..4], b"TSAL");
        assert_eq!(a.0[6], code);
        assert_eq!(a, b);
        // 3 videos x ceil(5 / 2) windows x 2 epochs, plus the header.
        assert_eq!(a.1.lines().count(), 3 * 3 * 2 + 1);
    }
}

#[test]
fn self_comparison_scores_perfect_cc_and_sim() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, ds) = dataset(dir.path());
    let pred = dir.path().join("pred");
    copy_gt(&ds, &pred);
    let json = dir.path().join("r.json");
    ok(&["evaluate", "--manifest", s(&manifest), "--predictions", s(&pred), "--out", s(&json)]);
    let r = EvalReport::from_json(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r.per_video.len(), 3);
    for scores in r.per_video.values() {
        assert!((scores.cc.unwrap() - 1.0).abs() < 1e-12);
        assert!((scores.sim.unwrap() - 1.0).abs() < 1e-12);
    }
    assert_eq!(r.frame_counts["synth00"].frames, 5);
}

#[test]
fn metric_filter_keeps_only_the_requested_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, ds) = dataset(dir.path());
    let pred = dir.path().join("pred");
    copy_gt(&ds, &pred);
    let json = dir.path().join("r.json");
    let table = ok(&[
        "evaluate", "--manifest", s(&manifest), "--predictions", s(&pred), "--metrics", "nss", "--out", s(&json),
    ]);
    assert_eq!(table.lines().next().unwrap().split_whitespace().collect::<Vec<_>>(), ["video", "NSS"]);
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(value["metrics"], serde_json::json!(["nss"]));
    assert!(value["per_video"]["synth00"]["cc"].is_null());
}

#[test]
fn report_re_renders_the_evaluate_table_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = dataset(dir.path());
    let ckpt = dir.path().join("m.ckpt");
    save_checkpoint(&AdaptationModel::init(Variant::ConvLstm, 3, 2), None, &ckpt).unwrap();
    let pred = dir.path().join("pred");
    ok(&["predict", "--manifest", s(&manifest), "--checkpoint", s(&ckpt), "--out", s(&pred)]);
    let json = dir.path().join("r.json");
    let table = ok(&["evaluate", "--manifest", s(&manifest), "--predictions", s(&pred), "--out", s(&json)]);
    assert!(table.contains("AVERAGE"));
    assert_eq!(ok(&["report", s(&json)]), table);
}

#[test]
fn evaluation_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, ds) = dataset(dir.path());
    let pred = dir.path().join("pred");
    copy_gt(&ds, &pred);
    let run = |threads: &str, name: &str| {
        let json = dir.path().join(name);
        ok(&["--threads", threads, "evaluate", "--manifest", s(&manifest), "--predictions", s(&pred), "--out", s(&json)]);
        fs::read(json).unwrap()
    };
    assert_eq!(run("1", "a.json"), run("3", "b.json"));
}

#[test]
fn config_file_supplies_settings_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.json");
    let out = dir.path().join("gen");
    fs::write(&cfg, format!(r#"{{"out": {:?}, "videos": 1, "frames": 2, "height": 8, "width": 8}}"#, s(&out))).unwrap();
    let res = tempsal(&["--config", s(&cfg), "generate", "--frames", "3"]);
    assert!(res.status.success());
    let stderr = String::from_utf8(res.stderr).unwrap();
    assert!(stderr.contains(r#""frames":3"#), "{stderr}");
    let ds = Dataset::load(&out.join("manifest.json")).unwrap();
    assert_eq!(ds.manifest.videos.len(), 1);
    assert_eq!(ds.manifest.videos[0].frames.len(), 3);

    fs::write(&cfg, r#"{"frams": 2}"#).unwrap();
    let res = tempsal(&["--config", s(&cfg), "generate", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8(res.stderr).unwrap().starts_with("ERROR Config:"));
}

#[test]
fn failures_report_machine_readable_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, ds) = dataset(dir.path());

    let res = tempsal(&["evaluate", "--manifest", s(&manifest), "--predictions", s(&dir.path().join("none"))]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8(res.stderr).unwrap();
    let line = err.lines().find(|l| l.starts_with("ERROR")).unwrap();
    assert_eq!(line, "ERROR MissingPrediction: missing prediction for video 'synth00' frame 0");

    let bad = dir.path().join("bad.ckpt");
    fs::write(&bad, b"TSAL\x01\x00garbage").unwrap();
    let res = tempsal(&["predict", "--manifest", s(&manifest), "--checkpoint", s(&bad), "--out", s(dir.path())]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8(res.stderr).unwrap().contains("ERROR CorruptCheckpoint:"));

    let res = tempsal(&["train", "--manifest", s(&manifest), "--variant", "gru", "--ckpt", "x"]);
    assert!(String::from_utf8(res.stderr).unwrap().contains("ERROR Config:"));

    let res = tempsal(&["evaluate", "--no-such-flag"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8(res.stderr).unwrap().starts_with("ERROR UsageError:"));

    // Score files over different videos cannot be compared.
    let pred = dir.path().join("pred");
    copy_gt(&ds, &pred);
    let a = dir.path().join("a.json");
    ok(&["evaluate", "--manifest", s(&manifest), "--predictions", s(&pred), "--out", s(&a)]);
    let mut r = EvalReport::from_json(&fs::read_to_string(&a).unwrap()).unwrap();
    r.per_video.remove("synth02");
    r.groups.values_mut().for_each(|m| m.retain(|v| v != "synth02"));
    let b = dir.path().join("b.json");
    fs::write(&b, r.to_json().unwrap()).unwrap();
    let res = tempsal(&["report", s(&a), s(&b)]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8(res.stderr).unwrap().contains("\nERROR InconsistentVideos:"));
}
