use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{mean_defined, Metric, MetricScores};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameCounts {
    pub frames: usize,
    pub skipped_no_fixations: usize,
    pub skipped_no_gt_mass: usize,
}

/// Per-video scores plus unweighted per-group averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Columns present in this report, in display order.
    pub metrics: Vec<Metric>,
    pub per_video: BTreeMap<String, MetricScores>,
    pub groups: BTreeMap<String, Vec<String>>,
    pub group_averages: BTreeMap<String, MetricScores>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub frame_counts: BTreeMap<String, FrameCounts>,
}

impl EvalReport {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Groups videos and averages each metric over the members of every group.
/// Undefined member values are left out of the mean.
pub fn aggregate_report(
    per_video: BTreeMap<String, MetricScores>,
    grouping: BTreeMap<String, Vec<String>>,
    metrics: &[Metric],
) -> Result<EvalReport> {
    let mut group_averages = BTreeMap::new();
    for (group, members) in &grouping {
        if let Some(unknown) = members.iter().find(|v| !per_video.contains_key(*v)) {
            return Err(Error::UnknownVideo(unknown.clone()));
        }
        let mut avg = MetricScores::default();
        for &metric in metrics {
            avg.set(
                metric,
                mean_defined(members.iter().map(|v| per_video[v].get(metric))),
            );
        }
        group_averages.insert(group.clone(), avg);
    }
    Ok(EvalReport {
        metrics: metrics.to_vec(),
        per_video,
        groups: grouping,
        group_averages,
        frame_counts: BTreeMap::new(),
    })
}
