use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use tempsal_core::metrics::{aggregate_report, render_comparison, render_report, EvalReport, Metric};
use tempsal_core::{Error, Result};

use crate::config::log_resolved;

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArgs {
    /// EvalReport JSON files, one per model.
    #[serde(default)]
    pub files: Vec<PathBuf>,
    /// JSON object mapping group name to a list of video ids; replaces the
    /// grouping stored in the score files.
    #[arg(long)]
    pub grouping: Option<PathBuf>,
    /// Metric shown when comparing several models (default nss).
    #[arg(long)]
    pub metric: Option<String>,
    /// Model names for the comparison rows, comma-separated (default: file stems).
    #[arg(long)]
    pub names: Option<String>,
}

#[derive(Serialize)]
struct Resolved<'a> {
    files: &'a [PathBuf],
    grouping: Option<&'a PathBuf>,
    metric: &'static str,
    names: &'a [String],
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn regroup(report: EvalReport, grouping: &BTreeMap<String, Vec<String>>) -> Result<EvalReport> {
    let counts = report.frame_counts;
    let mut out = aggregate_report(report.per_video, grouping.clone(), &report.metrics)?;
    out.frame_counts = counts;
    Ok(out)
}

pub fn run(args: ReportArgs) -> Result<()> {
    if args.files.is_empty() {
        return Err(Error::Config("report needs at least one score file".into()));
    }
    let metric: Metric = args.metric.as_deref().unwrap_or("nss").parse()?;
    let names: Vec<String> = match &args.names {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => args
            .files
            .iter()
            .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
            .collect(),
    };
    if names.len() != args.files.len() {
        return Err(Error::Config(format!("{} names for {} score files", names.len(), args.files.len())));
    }
    log_resolved(
        "report",
        &Resolved { files: &args.files, grouping: args.grouping.as_ref(), metric: metric.key(), names: &names },
    );

    let grouping: Option<BTreeMap<String, Vec<String>>> = match &args.grouping {
        Some(p) => Some(serde_json::from_str(&read(p)?)?),
        None => None,
    };
    let mut reports = Vec::with_capacity(args.files.len());
    for (name, path) in names.into_iter().zip(&args.files) {
        let mut r = EvalReport::from_json(&read(path)?)?;
        if let Some(g) = &grouping {
            r = regroup(r, g)?;
        }
        reports.push((name, r));
    }
    if reports.len() == 1 {
        print!("{}", render_report(&reports[0].1));
    } else {
        print!("{}", render_comparison(&reports, metric)?);
    }
    Ok(())
}
