use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use tempsal_core::data::{Dataset, VideoData};
use tempsal_core::metrics::{
    aggregate_report, evaluate_video, render_report, EvalOptions, EvalReport, FixationSet, Metric,
};
use tempsal_core::{Error, Result};

use crate::config::{log_resolved, required};

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory holding <video_id>/<frame>.pgm predicted maps.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Comma-separated subset of auc_j,s_auc,nss,cc,sim (default: all).
    #[arg(long)]
    pub metrics: Option<String>,
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Resolved<'a> {
    manifest: &'a PathBuf,
    predictions: &'a PathBuf,
    metrics: Vec<&'static str>,
    shuffle_seed: u64,
    out: Option<&'a PathBuf>,
    threads: usize,
}

pub fn parse_metrics(list: &str) -> Result<Vec<Metric>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(Metric::ALL.to_vec());
    }
    let mut picked = Vec::new();
    for part in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m: Metric = part.parse()?;
        if !picked.contains(&m) {
            picked.push(m);
        }
    }
    if picked.is_empty() {
        return Err(Error::Config("no metrics selected".into()));
    }
    picked.sort();
    Ok(picked)
}

/// Fixations of every video except `skip`, pooled as shuffled-AUC negatives.
fn shuffle_pool(videos: &[VideoData], skip: usize) -> FixationSet {
    videos
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .flat_map(|(_, v)| v.fixations.iter().flat_map(|f| f.points.iter().copied()))
        .collect()
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let manifest = required(args.manifest, "manifest")?;
    let predictions = required(args.predictions, "predictions")?;
    let metrics = parse_metrics(args.metrics.as_deref().unwrap_or("all"))?;
    let shuffle_seed = args.shuffle_seed.unwrap_or(42);
    log_resolved(
        "evaluate",
        &Resolved {
            manifest: &manifest,
            predictions: &predictions,
            metrics: metrics.iter().map(|m| m.key()).collect(),
            shuffle_seed,
            out: args.out.as_ref(),
            threads: rayon::current_num_threads(),
        },
    );

    let report = evaluate(&manifest, &predictions, &metrics, shuffle_seed)?;
    if let Some(out) = &args.out {
        fs::write(out, report.to_json()? + "\n").map_err(|e| Error::Io { path: out.clone(), source: e })?;
    }
    print!("{}", render_report(&report));
    Ok(())
}

pub fn evaluate(
    manifest: &std::path::Path,
    predictions: &std::path::Path,
    metrics: &[Metric],
    shuffle_seed: u64,
) -> Result<EvalReport> {
    let ds = Dataset::load(manifest)?;
    let pred_root = std::path::absolute(predictions).map_err(|e| Error::Io { path: predictions.to_path_buf(), source: e })?;
    for v in &ds.manifest.videos {
        for &f in &v.frames {
            if !ds.frame_path(&pred_root.join(&v.video_id), f).is_file() {
                return Err(Error::MissingPrediction { video: v.video_id.clone(), frame: f });
            }
        }
    }
    let videos = ds.load_all()?;
    let options = EvalOptions { metrics: metrics.iter().copied().collect(), shuffle_seed };
    let mut per_video = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for (i, v) in videos.iter().enumerate() {
        let maps = ds.load_maps(&pred_root.join(&v.video_id), &v.frames)?;
        let ev = evaluate_video(&maps, &v.fixations, &v.gts, &shuffle_pool(&videos, i), &options)?;
        per_video.insert(v.video_id.clone(), ev.scores);
        counts.insert(v.video_id.clone(), ev.counts);
    }
    let mut report = aggregate_report(per_video, ds.manifest.grouping(), metrics)?;
    report.frame_counts = counts;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_lists() {
        assert_eq!(parse_metrics("nss").unwrap(), vec![Metric::Nss]);
        assert_eq!(parse_metrics("sim, NSS,nss").unwrap(), vec![Metric::Nss, Metric::Sim]);
        assert_eq!(parse_metrics("all").unwrap(), Metric::ALL.to_vec());
        assert!(parse_metrics("nss,foo").is_err());
        assert!(parse_metrics(",").is_err());
    }
}
