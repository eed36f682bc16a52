use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use tempsal_core::data::{
    blur_fixations, decode_pgm, encode_pgm, generate_synthetic, load_map, synth_video, write_map,
    Dataset, SynthConfig,
};
use tempsal_core::metrics::{cc, FixationSet, SaliencyMap};
use tempsal_core::train::bce_loss;
use tempsal_core::Error;

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn small() -> SynthConfig {
    SynthConfig {
        videos: 2,
        frames: 6,
        height: 12,
        width: 10,
        ..SynthConfig::default()
    }
}

#[test]
fn synthetic_trees_are_byte_identical_per_seed() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_synthetic(&small(), a.path()).unwrap();
    generate_synthetic(&small(), b.path()).unwrap();
    generate_synthetic(&SynthConfig { seed: 8, ..small() }, c.path()).unwrap();
    let (ta, tb, tc) = (tree(a.path()), tree(b.path()), tree(c.path()));
    assert_eq!(ta.len(), 2 * (6 * 2 + 1) + 1);
    assert!(ta.contains_key(Path::new("synth00/static/000005.pgm")));
    assert_eq!(ta, tb);
    assert_ne!(ta, tc);
}

#[test]
fn generated_dataset_loads_back_as_generated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small();
    let ds = generate_synthetic(&cfg, dir.path()).unwrap();
    assert_eq!(ds.manifest.videos.len(), 2);
    let reloaded = Dataset::load(&dir.path().join("manifest.json")).unwrap();
    let loaded = reloaded.load_all().unwrap();
    for (i, v) in loaded.iter().enumerate() {
        let mem = synth_video(&cfg, i).unwrap();
        assert_eq!(v.statics, mem.statics);
        assert_eq!(v.gts, mem.gts);
        assert_eq!(v.fixations, mem.fixations);
    }
    let groups = reloaded.manifest.grouping();
    assert_eq!(groups["free-viewing"], vec!["synth00".to_string()]);
    assert_eq!(groups["task-driven"], vec!["synth01".to_string()]);
}

#[test]
fn zero_lag_zero_noise_reproduction_hits_target_entropy() {
    let cfg = SynthConfig { lag: 0, noise: 0.0, frames: 4, ..SynthConfig::default() };
    let v = synth_video(&cfg, 0).unwrap();
    for (s, g) in v.statics.iter().zip(&v.gts) {
        assert_eq!(s, g);
        let t = g.to_tensor();
        let (loss, _) = bce_loss(&t, &t).unwrap();
        let eps = 1e-7;
        let entropy: f64 = t
            .data()
            .iter()
            .map(|&y| {
                let p = y.clamp(eps, 1.0 - eps);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / t.data().len() as f64;
        assert!((loss - entropy).abs() < 1e-12);
    }
}

#[test]
fn lag_two_ground_truth_matches_static_maps_two_frames_ahead() {
    // Exhaustive search over temporal shifts: the ground truth at t agrees
    // best with the static map at t + 2, and strictly better than with the
    // same-frame static map.
    let cfg = SynthConfig { lag: 2, ..SynthConfig::default() };
    for index in 0..cfg.videos {
        let v = synth_video(&cfg, index).unwrap();
        let mean_cc = |shift: usize| {
            let n = cfg.frames - 4;
            (0..n)
                .map(|t| cc(&v.statics[t + shift], &v.gts[t]).unwrap().unwrap())
                .sum::<f64>()
                / n as f64
        };
        let scores: Vec<f64> = (0..=4).map(mean_cc).collect();
        let best = (0..=4).max_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
        assert_eq!(best, 2, "video {index}: {scores:?}");
        assert!(scores[0] < scores[2]);
    }
}

#[test]
fn missing_frame_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic(&small(), dir.path()).unwrap();
    fs::remove_file(dir.path().join("synth01/gt/000003.pgm")).unwrap();
    let r = Dataset::load(&dir.path().join("manifest.json"));
    assert!(matches!(r, Err(Error::MissingInput(p)) if p.ends_with("000003.pgm")));
}

#[test]
fn native_resolution_maps_and_fixations_are_rescaled() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let m = SaliencyMap::new(8, 8, (0..64).map(|k| (k % 8) as f64 / 7.0).collect()).unwrap();
    write_map(&m, &root.join("v/static/000000.pgm")).unwrap();
    write_map(&m, &root.join("v/gt/000000.pgm")).unwrap();
    fs::write(root.join("v/fix.csv"), "0,7,0\n0,3,4\n").unwrap();
    fs::write(
        root.join("manifest.json"),
        r#"{"videos":[{"video_id":"v","frames":[0],"static_map_dir":"v/static","gt_map_dir":"v/gt","fixation_file":"v/fix.csv","group_label":"task-driven"}],"resolution":[4,4]}"#,
    )
    .unwrap();
    let ds = Dataset::load(&root.join("manifest.json")).unwrap();
    let v = ds.load_video(&ds.manifest.videos[0]).unwrap();
    assert_eq!(v.statics[0].dims(), (4, 4));
    assert_eq!(v.fixations[0].points, vec![(3, 0), (1, 2)]);
}

#[test]
fn unknown_manifest_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("manifest.json");
    fs::write(&p, r#"{"videos":[],"resolution":[4,4],"extra":1}"#).unwrap();
    assert!(matches!(Dataset::load(&p), Err(Error::Manifest(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pgm_round_trip_on_quantized_maps(h in 1usize..20, w in 1usize..20, bytes in proptest::collection::vec(any::<u8>(), 400)) {
        let values: Vec<f64> = bytes[..h * w].iter().map(|&b| b as f64 / 255.0).collect();
        let m = SaliencyMap::new(h, w, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        write_map(&m, &p).unwrap();
        prop_assert_eq!(load_map(&p).unwrap(), m.clone());
        prop_assert_eq!(decode_pgm(&encode_pgm(&m).unwrap(), &p).unwrap(), m);
    }

    #[test]
    fn blur_is_translation_equivariant_in_the_interior(
        r in 8usize..14, c in 8usize..14, dr in -3isize..=3, dc in -3isize..=3, sigma in 0.5f64..2.0,
    ) {
        let dims = (30, 30);
        let a = blur_fixations(&FixationSet::new(vec![(r, c)]), dims, sigma);
        let (r2, c2) = ((r as isize + dr) as usize, (c as isize + dc) as usize);
        let b = blur_fixations(&FixationSet::new(vec![(r2, c2)]), dims, sigma);
        for y in 0..30isize {
            for x in 0..30isize {
                let (sy, sx) = (y - dr, x - dc);
                let expected = if (0..30).contains(&sy) && (0..30).contains(&sx) { a.get(sy as usize, sx as usize) } else { 0.0 };
                prop_assert_eq!(b.get(y as usize, x as usize), expected);
            }
        }
    }
}
