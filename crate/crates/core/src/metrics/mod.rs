//! Saliency evaluation metrics and per-video / per-group aggregation.

mod report;
mod scores;
mod video;
mod table;

pub use report::{aggregate_report, EvalReport, FrameCounts};
pub use scores::{auc_judd, cc, nss, roc_area, shuffled_auc, sim, SAUC_NEGATIVE_CAP};
pub use table::{fmt3, render_comparison, render_report};
pub use video::{evaluate_video, EvalOptions, VideoEvaluation};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor4};

/// Single-channel nonnegative heat map.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {height}x{width} map",
                values.len()
            )));
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            if !v.is_finite() {
                return Err(Error::NonFinite("SaliencyMap::new"));
            }
            return Err(Error::OutOfRange(v));
        }
        Ok(SaliencyMap {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        SaliencyMap {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    /// Reads a `1 x 1 x H x W` tensor.
    pub fn from_tensor(t: &Tensor4) -> Result<Self> {
        let s = t.shape();
        if s.batch != 1 || s.channels != 1 {
            return Err(Error::DimensionMismatch(format!(
                "saliency map needs a 1x1xHxW tensor, got {s}"
            )));
        }
        Self::new(s.height, s.width, t.data().to_vec())
    }

    pub fn to_tensor(&self) -> Tensor4 {
        Tensor4::new(
            Shape::new(1, 1, self.height, self.width),
            self.values.clone(),
        )
        .expect("saliency maps are finite and nonempty")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub(crate) fn at(&self, (row, col): (usize, usize)) -> Result<f64> {
        if row >= self.height || col >= self.width {
            return Err(Error::OutOfBounds {
                row,
                col,
                height: self.height,
                width: self.width,
            });
        }
        Ok(self.get(row, col))
    }
}

/// Gaze hit locations `(row, col)` for one frame. Repeated samples are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixationSet {
    pub points: Vec<(usize, usize)>,
}

impl FixationSet {
    pub fn new(points: Vec<(usize, usize)>) -> Self {
        FixationSet { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl FromIterator<(usize, usize)> for FixationSet {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        FixationSet::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AucJ,
    SAuc,
    Nss,
    Cc,
    Sim,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::AucJ, Metric::SAuc, Metric::Nss, Metric::Cc, Metric::Sim];

    /// Column header as printed in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Metric::AucJ => "AUC-J",
            Metric::SAuc => "sAUC",
            Metric::Nss => "NSS",
            Metric::Cc => "CC",
            Metric::Sim => "SIM",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Metric::AucJ => "auc_j",
            Metric::SAuc => "s_auc",
            Metric::Nss => "nss",
            Metric::Cc => "cc",
            Metric::Sim => "sim",
        }
    }

    /// Fixation-based metrics need at least one fixation in the frame.
    pub fn uses_fixations(self) -> bool {
        matches!(self, Metric::AucJ | Metric::SAuc | Metric::Nss)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "auc_j" | "aucj" | "auc_judd" => Ok(Metric::AucJ),
            "s_auc" | "sauc" | "shuffled_auc" => Ok(Metric::SAuc),
            "nss" => Ok(Metric::Nss),
            "cc" => Ok(Metric::Cc),
            "sim" => Ok(Metric::Sim),
            _ => Err(Error::Config(format!("unknown metric '{s}'"))),
        }
    }
}

/// One score per metric; `None` marks an undefined (or not computed) value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub auc_j: Option<f64>,
    pub s_auc: Option<f64>,
    pub nss: Option<f64>,
    pub cc: Option<f64>,
    pub sim: Option<f64>,
}

impl MetricScores {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::AucJ => self.auc_j,
            Metric::SAuc => self.s_auc,
            Metric::Nss => self.nss,
            Metric::Cc => self.cc,
            Metric::Sim => self.sim,
        }
    }

    pub fn set(&mut self, metric: Metric, value: Option<f64>) {
        let slot = match metric {
            Metric::AucJ => &mut self.auc_j,
            Metric::SAuc => &mut self.s_auc,
            Metric::Nss => &mut self.nss,
            Metric::Cc => &mut self.cc,
            Metric::Sim => &mut self.sim,
        };
        *slot = value;
    }

    pub fn with(mut self, metric: Metric, value: f64) -> Self {
        self.set(metric, Some(value));
        self
    }
}

/// Arithmetic mean of the defined values, in iteration order.
pub(crate) fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
