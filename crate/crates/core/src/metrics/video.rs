use std::collections::BTreeSet;

use super::report::FrameCounts;
use super::scores::{auc_judd, cc, nss, shuffled_auc, sim};
use super::{mean_defined, FixationSet, Metric, MetricScores, SaliencyMap};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub metrics: BTreeSet<Metric>,
    /// Base seed for shuffled-AUC subsampling; each frame derives its own.
    pub shuffle_seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            metrics: Metric::ALL.into_iter().collect(),
            shuffle_seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoEvaluation {
    pub scores: MetricScores,
    pub counts: FrameCounts,
}

/// Per-frame seed, independent of evaluation order.
fn frame_seed(base: u64, frame: usize) -> u64 {
    let mut z = base ^ (frame as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Default, Clone, Copy)]
struct FrameResult {
    scores: MetricScores,
    fixations_missing: bool,
    gt_massless: bool,
}

fn frame_scores(
    map: &SaliencyMap,
    fix: &FixationSet,
    gt: &SaliencyMap,
    pool: &FixationSet,
    seed: u64,
    metrics: &BTreeSet<Metric>,
) -> Result<FrameResult> {
    let mut out = FrameResult {
        fixations_missing: fix.is_empty(),
        gt_massless: gt.sum() <= 0.0,
        ..Default::default()
    };
    for &metric in metrics {
        let value = if metric.uses_fixations() {
            if out.fixations_missing {
                continue;
            }
            match metric {
                Metric::Nss => Some(nss(map, fix)?),
                Metric::AucJ => match auc_judd(map, fix) {
                    Err(Error::AllFixated) => None,
                    r => Some(r?),
                },
                Metric::SAuc => match shuffled_auc(map, fix, pool, seed) {
                    Err(Error::EmptyNegatives) => None,
                    r => Some(r?),
                },
                _ => unreachable!(),
            }
        } else {
            if out.gt_massless {
                continue;
            }
            match metric {
                Metric::Cc => cc(map, gt)?,
                Metric::Sim => match sim(map, gt) {
                    Err(Error::ZeroMass) => None,
                    r => Some(r?),
                },
                _ => unreachable!(),
            }
        };
        out.scores.set(metric, value);
    }
    Ok(out)
}

/// Scores one video as the mean of its per-frame scores.
///
/// Frames without fixations are skipped for AUC-J, sAUC and NSS; frames whose
/// ground-truth map has no mass are skipped for CC and SIM. Undefined per-frame
/// values (constant maps for CC, for instance) are left out of the mean.
pub fn evaluate_video(
    maps: &[SaliencyMap],
    fixations: &[FixationSet],
    gts: &[SaliencyMap],
    shuffle_pool: &FixationSet,
    options: &EvalOptions,
) -> Result<VideoEvaluation> {
    if maps.len() != fixations.len() || maps.len() != gts.len() {
        return Err(Error::LengthMismatch(format!(
            "{} maps, {} fixation sets, {} ground-truth maps",
            maps.len(),
            fixations.len(),
            gts.len()
        )));
    }
    if maps.is_empty() {
        return Err(Error::LengthMismatch("video has no frames".into()));
    }

    let eval = |i: usize| {
        frame_scores(
            &maps[i],
            &fixations[i],
            &gts[i],
            shuffle_pool,
            frame_seed(options.shuffle_seed, i),
            &options.metrics,
        )
    };
    #[cfg(feature = "parallel")]
    let frames: Vec<FrameResult> = {
        use rayon::prelude::*;
        (0..maps.len()).into_par_iter().map(eval).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let frames: Vec<FrameResult> = (0..maps.len()).map(eval).collect::<Result<_>>()?;

    let mut scores = MetricScores::default();
    for &metric in &options.metrics {
        scores.set(metric, mean_defined(frames.iter().map(|f| f.scores.get(metric))));
    }
    Ok(VideoEvaluation {
        scores,
        counts: FrameCounts {
            frames: frames.len(),
            skipped_no_fixations: frames.iter().filter(|f| f.fixations_missing).count(),
            skipped_no_gt_mass: frames.iter().filter(|f| f.gt_massless).count(),
        },
    })
}
