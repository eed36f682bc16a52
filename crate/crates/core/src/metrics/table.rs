//! Plain-text score tables.

use std::collections::BTreeSet;

use super::{EvalReport, Metric, MetricScores};
use crate::error::{Error, Result};

/// Three decimals, halves rounded away from zero. The small bias absorbs
/// binary representation error in values such as 2.6525.
pub fn fmt3(x: f64) -> String {
    let scaled = (x.abs() * 1000.0 + 0.5 + 1e-9).floor();
    if scaled == 0.0 {
        return "0.000".to_string();
    }
    let sign = if x < 0.0 { "-" } else { "" };
    format!("{sign}{:.3}", scaled / 1000.0)
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt3).unwrap_or_else(|| "-".to_string())
}

fn render_rows(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, s) in row.iter().enumerate() {
            if c == 0 {
                line.push_str(&format!("{s:<w$}", w = widths[0]));
            } else {
                line.push_str(&format!("  {s:>w$}", w = widths[c]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn score_row(label: &str, scores: &MetricScores, metrics: &[Metric]) -> Vec<String> {
    std::iter::once(label.to_string())
        .chain(metrics.iter().map(|&m| cell(scores.get(m))))
        .collect()
}

/// Video rows by metric columns; each group ends with an AVERAGE row.
/// Videos outside every group follow under `(ungrouped)`.
pub fn render_report(report: &EvalReport) -> String {
    let mut header = vec!["video".to_string()];
    header.extend(report.metrics.iter().map(|m| m.label().to_string()));
    let mut rows = vec![header];
    let mut grouped = BTreeSet::new();
    for (group, members) in &report.groups {
        rows.push(vec![format!("[{group}]")]);
        for v in members {
            grouped.insert(v.as_str());
            rows.push(score_row(v, &report.per_video[v], &report.metrics));
        }
        let avg = report.group_averages.get(group).cloned().unwrap_or_default();
        rows.push(score_row("AVERAGE", &avg, &report.metrics));
    }
    let rest: Vec<&String> = report.per_video.keys().filter(|v| !grouped.contains(v.as_str())).collect();
    if !rest.is_empty() {
        rows.push(vec!["(ungrouped)".to_string()]);
        for v in rest {
            rows.push(score_row(v, &report.per_video[v], &report.metrics));
        }
    }
    render_rows(&rows)
}

/// Model rows by video columns for one metric, one block per group of the
/// first report, with an AVERAGE column. With more than one model the
/// maximum of every column is marked with `*`.
pub fn render_comparison(models: &[(String, EvalReport)], metric: Metric) -> Result<String> {
    let Some((first_name, first)) = models.first() else {
        return Err(Error::InconsistentVideos("no score files".into()));
    };
    let videos: BTreeSet<&String> = first.per_video.keys().collect();
    for (name, r) in &models[1..] {
        let other: BTreeSet<&String> = r.per_video.keys().collect();
        if other != videos {
            return Err(Error::InconsistentVideos(format!(
                "'{name}' and '{first_name}' cover different videos"
            )));
        }
    }
    let mark = models.len() > 1;
    let mut blocks = vec![format!("{}\n", metric.label())];
    for (group, members) in &first.groups {
        let mut header = vec![format!("[{group}]")];
        header.extend(members.iter().cloned());
        header.push("AVERAGE".to_string());
        // values[model][column]
        let values: Vec<Vec<Option<f64>>> = models
            .iter()
            .map(|(_, r)| {
                let mut v: Vec<Option<f64>> = members.iter().map(|m| r.per_video[m].get(metric)).collect();
                v.push(super::mean_defined(v.clone()));
                v
            })
            .collect();
        let maxima: Vec<Option<f64>> = (0..=members.len())
            .map(|c| values.iter().filter_map(|row| row[c]).reduce(f64::max))
            .collect();
        let mut rows = vec![header];
        for ((name, _), row) in models.iter().zip(&values) {
            let mut r = vec![name.clone()];
            for (c, v) in row.iter().enumerate() {
                let mut s = cell(*v);
                if mark {
                    let best = v.is_some() && fmt3(v.unwrap()) == maxima[c].map(fmt3).unwrap_or_default();
                    s.push(if best { '*' } else { ' ' });
                }
                r.push(s);
            }
            rows.push(r);
        }
        blocks.push(render_rows(&rows));
    }
    Ok(blocks.join("\n"))
}
