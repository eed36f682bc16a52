//! Dataset manifest: a JSON document describing every video, with paths
//! relative to the manifest's directory. Frame files are named by their
//! zero-padded six-digit index (`000042.pgm`).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::fixations::load_fixations;
use super::pgm::load_map;
use crate::error::{Error, Result};
use crate::metrics::{FixationSet, SaliencyMap};
use crate::train::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GroupLabel {
    #[serde(rename = "free-viewing")]
    FreeViewing,
    #[serde(rename = "task-driven")]
    TaskDriven,
}

impl GroupLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupLabel::FreeViewing => "free-viewing",
            GroupLabel::TaskDriven => "task-driven",
        }
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoRecord {
    pub video_id: String,
    pub frames: Vec<u64>,
    pub static_map_dir: PathBuf,
    pub gt_map_dir: PathBuf,
    pub fixation_file: PathBuf,
    pub group_label: GroupLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub videos: Vec<VideoRecord>,
    /// `(height, width)` every map is resized to on load.
    pub resolution: (usize, usize),
}

pub fn frame_file_name(frame: u64) -> String {
    format!("{frame:06}.pgm")
}

/// Bilinear resize with pixel-centre alignment.
pub fn resize_bilinear(map: &SaliencyMap, height: usize, width: usize) -> SaliencyMap {
    if map.dims() == (height, width) {
        return map.clone();
    }
    let (sh, sw) = map.dims();
    let (fy, fx) = (sh as f64 / height as f64, sw as f64 / width as f64);
    let coord = |dst: usize, f: f64, len: usize| {
        let s = ((dst as f64 + 0.5) * f - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, s - i0 as f64)
    };
    let mut values = Vec::with_capacity(height * width);
    for y in 0..height {
        let (y0, y1, ty) = coord(y, fy, sh);
        for x in 0..width {
            let (x0, x1, tx) = coord(x, fx, sw);
            let top = map.get(y0, x0) * (1.0 - tx) + map.get(y0, x1) * tx;
            let bottom = map.get(y1, x0) * (1.0 - tx) + map.get(y1, x1) * tx;
            values.push((top * (1.0 - ty) + bottom * ty).max(0.0));
        }
    }
    SaliencyMap::new(height, width, values).expect("interpolated values stay finite")
}

/// Maps a pixel index between resolutions through pixel centres, rounding half up.
pub fn rescale_coord(v: usize, from: usize, to: usize) -> usize {
    if from == to {
        return v;
    }
    let scaled = (v as f64 + 0.5) * to as f64 / from as f64 - 0.5;
    ((scaled + 0.5).floor().max(0.0) as usize).min(to - 1)
}

/// Everything one video contributes, resampled to the manifest resolution.
#[derive(Debug, Clone)]
pub struct VideoData {
    pub video_id: String,
    pub frames: Vec<u64>,
    pub statics: Vec<SaliencyMap>,
    pub gts: Vec<SaliencyMap>,
    pub fixations: Vec<FixationSet>,
}

impl VideoData {
    pub fn to_sample(&self) -> Sample {
        Sample {
            id: self.video_id.clone(),
            inputs: self.statics.iter().map(SaliencyMap::to_tensor).collect(),
            targets: self.gts.iter().map(SaliencyMap::to_tensor).collect(),
        }
    }
}

/// A manifest together with the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.videos.is_empty() {
            return Err(Error::Manifest("no videos".into()));
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(Error::Manifest("resolution must be nonzero".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for v in &self.videos {
            if !seen.insert(&v.video_id) {
                return Err(Error::Manifest(format!("duplicate video id '{}'", v.video_id)));
            }
            if v.frames.is_empty() {
                return Err(Error::Manifest(format!("video '{}' has no frames", v.video_id)));
            }
            if v.frames.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Manifest(format!(
                    "frame ids of '{}' are not strictly increasing",
                    v.video_id
                )));
            }
        }
        Ok(())
    }

    /// Video ids per group label.
    pub fn grouping(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for v in &self.videos {
            out.entry(v.group_label.to_string())
                .or_default()
                .push(v.video_id.clone());
        }
        out
    }
}

impl Dataset {
    /// Reads and validates a manifest, checking that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let ds = Dataset { root, manifest };
        for v in &ds.manifest.videos {
            let fix = ds.resolve(&v.fixation_file);
            if !fix.is_file() {
                return Err(Error::MissingInput(fix));
            }
            for &frame in &v.frames {
                for dir in [&v.static_map_dir, &v.gt_map_dir] {
                    let p = ds.frame_path(dir, frame);
                    if !p.is_file() {
                        return Err(Error::MissingInput(p));
                    }
                }
            }
        }
        Ok(ds)
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn frame_path(&self, dir: &Path, frame: u64) -> PathBuf {
        self.resolve(dir).join(frame_file_name(frame))
    }

    pub fn resolution(&self) -> (usize, usize) {
        self.manifest.resolution
    }

    pub fn video(&self, id: &str) -> Option<&VideoRecord> {
        self.manifest.videos.iter().find(|v| v.video_id == id)
    }

    fn load_resized(&self, path: &Path) -> Result<(SaliencyMap, (usize, usize))> {
        let map = load_map(path)?;
        let native = map.dims();
        let (h, w) = self.resolution();
        Ok((resize_bilinear(&map, h, w), native))
    }

    /// Loads a sequence of maps from `dir` for the given frames.
    pub fn load_maps(&self, dir: &Path, frames: &[u64]) -> Result<Vec<SaliencyMap>> {
        frames
            .iter()
            .map(|&f| Ok(self.load_resized(&self.frame_path(dir, f))?.0))
            .collect()
    }

    /// Loads static maps, ground truth and fixations of one video. Fixation
    /// coordinates are bounds-checked against each frame's native static-map
    /// size and rescaled to the manifest resolution.
    pub fn load_video(&self, video: &VideoRecord) -> Result<VideoData> {
        let (h, w) = self.resolution();
        let mut statics = Vec::with_capacity(video.frames.len());
        let mut native_dims = Vec::with_capacity(video.frames.len());
        for &f in &video.frames {
            let (m, native) = self.load_resized(&self.frame_path(&video.static_map_dir, f))?;
            statics.push(m);
            native_dims.push(native);
        }
        let gts = self.load_maps(&video.gt_map_dir, &video.frames)?;
        let fix_path = self.resolve(&video.fixation_file);
        let native_bounds = native_dims.first().copied().filter(|d| native_dims.iter().all(|x| x == d));
        let mut by_frame = load_fixations(&fix_path, native_bounds)?;
        let fixations = video
            .frames
            .iter()
            .zip(&native_dims)
            .map(|(f, &(nh, nw))| {
                let set = by_frame.remove(f).unwrap_or_default();
                set.points
                    .iter()
                    .map(|&(r, c)| {
                        if r >= nh || c >= nw {
                            return Err(Error::OutOfBounds {
                                row: r,
                                col: c,
                                height: nh,
                                width: nw,
                            });
                        }
                        Ok((rescale_coord(r, nh, h), rescale_coord(c, nw, w)))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(FixationSet::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(VideoData {
            video_id: video.video_id.clone(),
            frames: video.frames.clone(),
            statics,
            gts,
            fixations,
        })
    }

    pub fn load_all(&self) -> Result<Vec<VideoData>> {
        self.manifest.videos.iter().map(|v| self.load_video(v)).collect()
    }
}
