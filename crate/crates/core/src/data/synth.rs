//! Synthetic drifting-blob videos.
//!
//! A Gaussian blob moves with a persistent heading that wanders randomly and
//! reflects off the borders. For frame `t` the static map is the blob at `t`
//! plus Gaussian pixel noise; the ground truth is the clean blob at `t + lag`,
//! and fixations are sampled around that future position. With `lag > 0` a
//! model that tracks motion over time can beat any per-frame model.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::fixations::format_fixations;
use super::manifest::{frame_file_name, Dataset, DatasetManifest, GroupLabel, VideoRecord};
use super::pgm::{encode_pgm, quantize};
use crate::error::{Error, Result};
use crate::metrics::{FixationSet, SaliencyMap};
use crate::train::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub videos: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    /// Ground truth at `t` shows the blob at `t + lag`.
    pub lag: usize,
    /// Standard deviation of the additive pixel noise on static maps.
    pub noise: f64,
    pub blob_sigma: f64,
    /// Pixels moved per frame.
    pub speed: f64,
    /// Standard deviation of the per-frame heading change, in radians.
    pub turn: f64,
    pub fixations_per_frame: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            videos: 4,
            frames: 64,
            height: 32,
            width: 32,
            seed: 7,
            lag: 1,
            noise: 0.1,
            blob_sigma: 2.5,
            speed: 1.0,
            turn: 0.3,
            fixations_per_frame: 4,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height < 8 || self.width < 8 {
            return Err(Error::Config("synthetic maps must be at least 8x8".into()));
        }
        if self.videos == 0 || self.frames == 0 {
            return Err(Error::Config("need at least one video and one frame".into()));
        }
        let nonneg = |v: f64| v >= 0.0;
        if self.blob_sigma.is_nan() || self.blob_sigma <= 0.0 || ![self.noise, self.speed, self.turn].into_iter().all(nonneg) {
            return Err(Error::Config("blob_sigma must be positive; noise, speed and turn nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthVideo {
    pub video_id: String,
    pub group_label: GroupLabel,
    /// Blob centre `(row, col)` for frames `0 .. frames + lag`.
    pub trajectory: Vec<(f64, f64)>,
    pub statics: Vec<SaliencyMap>,
    pub gts: Vec<SaliencyMap>,
    pub fixations: Vec<FixationSet>,
}

impl SynthVideo {
    pub fn to_sample(&self) -> Sample {
        Sample {
            id: self.video_id.clone(),
            inputs: self.statics.iter().map(SaliencyMap::to_tensor).collect(),
            targets: self.gts.iter().map(SaliencyMap::to_tensor).collect(),
        }
    }
}

/// Clean blob with peak 1 at `centre`.
pub fn blob(height: usize, width: usize, centre: (f64, f64), sigma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(height * width);
    for y in 0..height {
        for x in 0..width {
            let d2 = (y as f64 - centre.0).powi(2) + (x as f64 - centre.1).powi(2);
            out.push((-d2 / (2.0 * sigma * sigma)).exp());
        }
    }
    out
}

/// Values as they come back from an 8-bit map file.
fn quantized_map(height: usize, width: usize, values: Vec<f64>) -> SaliencyMap {
    let q = values
        .into_iter()
        .map(|v| quantize(v.clamp(0.0, 1.0)).expect("clamped") as f64 / 255.0)
        .collect();
    SaliencyMap::new(height, width, q).expect("quantized map is valid")
}

fn reflect(v: f64, lo: f64, hi: f64) -> (f64, bool) {
    if v < lo {
        (2.0 * lo - v, true)
    } else if v > hi {
        (2.0 * hi - v, true)
    } else {
        (v, false)
    }
}

fn trajectory(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let margin = cfg.blob_sigma.min(cfg.height.min(cfg.width) as f64 / 4.0);
    let (lo_y, hi_y) = (margin, cfg.height as f64 - 1.0 - margin);
    let (lo_x, hi_x) = (margin, cfg.width as f64 - 1.0 - margin);
    let mut pos = (rng.random_range(lo_y..=hi_y), rng.random_range(lo_x..=hi_x));
    let mut heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let turn = Normal::new(0.0, cfg.turn).expect("turn is nonnegative");
    let mut out = Vec::with_capacity(cfg.frames + cfg.lag);
    for _ in 0..cfg.frames + cfg.lag {
        out.push(pos);
        let (mut dy, mut dx) = (cfg.speed * heading.sin(), cfg.speed * heading.cos());
        let (y, fy) = reflect(pos.0 + dy, lo_y, hi_y);
        let (x, fx) = reflect(pos.1 + dx, lo_x, hi_x);
        if fy {
            dy = -dy;
        }
        if fx {
            dx = -dx;
        }
        pos = (y.clamp(lo_y, hi_y), x.clamp(lo_x, hi_x));
        heading = dy.atan2(dx) + turn.sample(rng);
    }
    out
}

/// Generates one video in memory. Maps are quantized to 8 bits so they equal
/// what [`generate_synthetic`] writes to disk.
pub fn synth_video(cfg: &SynthConfig, index: usize) -> Result<SynthVideo> {
    cfg.validate()?;
    let seed = cfg.seed ^ (index as u64 + 1).wrapping_mul(0xA076_1D64_78BD_642F);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let traj = trajectory(cfg, &mut rng);
    let (h, w) = (cfg.height, cfg.width);
    let noise = Normal::new(0.0, cfg.noise).expect("noise is nonnegative");
    let spread = Normal::new(0.0, cfg.blob_sigma / 2.0).expect("sigma is positive");

    let mut statics = Vec::with_capacity(cfg.frames);
    let mut gts = Vec::with_capacity(cfg.frames);
    let mut fixations = Vec::with_capacity(cfg.frames);
    for t in 0..cfg.frames {
        let mut s = blob(h, w, traj[t], cfg.blob_sigma);
        if cfg.noise > 0.0 {
            s.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
        }
        statics.push(quantized_map(h, w, s));
        let future = traj[t + cfg.lag];
        gts.push(quantized_map(h, w, blob(h, w, future, cfg.blob_sigma)));
        let fix = (0..cfg.fixations_per_frame)
            .map(|_| {
                let r = (future.0 + spread.sample(&mut rng)).round().clamp(0.0, (h - 1) as f64);
                let c = (future.1 + spread.sample(&mut rng)).round().clamp(0.0, (w - 1) as f64);
                (r as usize, c as usize)
            })
            .collect();
        fixations.push(fix);
    }
    Ok(SynthVideo {
        video_id: format!("synth{index:02}"),
        group_label: if index % 2 == 0 {
            GroupLabel::FreeViewing
        } else {
            GroupLabel::TaskDriven
        },
        trajectory: traj,
        statics,
        gts,
        fixations,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `<root>/<video_id>/{static/, gt/, fixations.csv}` plus
/// `<root>/manifest.json` and returns the loaded dataset.
pub fn generate_synthetic(cfg: &SynthConfig, root: &Path) -> Result<Dataset> {
    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.videos);
    for index in 0..cfg.videos {
        let v = synth_video(cfg, index)?;
        let base = PathBuf::from(&v.video_id);
        for (t, (s, g)) in v.statics.iter().zip(&v.gts).enumerate() {
            let name = frame_file_name(t as u64);
            write(&root.join(&base).join("static").join(&name), &encode_pgm(s)?)?;
            write(&root.join(&base).join("gt").join(&name), &encode_pgm(g)?)?;
        }
        let by_frame: BTreeMap<u64, FixationSet> = v
            .fixations
            .iter()
            .enumerate()
            .map(|(t, f)| (t as u64, f.clone()))
            .collect();
        write(
            &root.join(&base).join("fixations.csv"),
            format_fixations(&by_frame).as_bytes(),
        )?;
        records.push(VideoRecord {
            video_id: v.video_id.clone(),
            frames: (0..cfg.frames as u64).collect(),
            static_map_dir: base.join("static"),
            gt_map_dir: base.join("gt"),
            fixation_file: base.join("fixations.csv"),
            group_label: v.group_label,
        });
    }
    let manifest = DatasetManifest {
        videos: records,
        resolution: (cfg.height, cfg.width),
    };
    let path = root.join("manifest.json");
    write(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Dataset::load(&path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_video() {
        let cfg = SynthConfig {
            frames: 10,
            ..SynthConfig::default()
        };
        assert_eq!(synth_video(&cfg, 1).unwrap(), synth_video(&cfg, 1).unwrap());
        assert_ne!(synth_video(&cfg, 1).unwrap(), synth_video(&cfg, 2).unwrap());
    }

    #[test]
    fn trajectory_stays_inside_and_moves_at_speed() {
        let cfg = SynthConfig {
            frames: 200,
            ..SynthConfig::default()
        };
        let v = synth_video(&cfg, 0).unwrap();
        for &(y, x) in &v.trajectory {
            assert!((0.0..32.0).contains(&y) && (0.0..32.0).contains(&x));
        }
        let step = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        let max = v.trajectory.windows(2).map(|w| step(w[0], w[1])).fold(0.0, f64::max);
        assert!(max <= cfg.speed + 1e-9);
    }

    #[test]
    fn zero_lag_zero_noise_static_equals_gt() {
        let cfg = SynthConfig {
            frames: 6,
            lag: 0,
            noise: 0.0,
            ..SynthConfig::default()
        };
        let v = synth_video(&cfg, 0).unwrap();
        assert_eq!(v.statics, v.gts);
    }

    #[test]
    fn fixations_are_in_bounds() {
        let v = synth_video(&SynthConfig::default(), 3).unwrap();
        assert_eq!(v.group_label, GroupLabel::TaskDriven);
        for f in &v.fixations {
            assert_eq!(f.len(), 4);
            assert!(f.points.iter().all(|&(r, c)| r < 32 && c < 32));
        }
    }

    #[test]
    fn small_maps_are_rejected() {
        let cfg = SynthConfig {
            height: 7,
            ..SynthConfig::default()
        };
        assert!(synth_video(&cfg, 0).is_err());
    }
}
