//! Fixation lists: one `frame_index,row,col` record per line, `#` comments.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::FixationSet;

pub type FixationsByFrame = BTreeMap<u64, FixationSet>;

/// Parses fixation text. When `bounds` (height, width) is given, points
/// outside it are rejected with their line number.
pub fn parse_fixations(
    text: &str,
    path: &Path,
    bounds: Option<(usize, usize)>,
) -> Result<FixationsByFrame> {
    let mut out = FixationsByFrame::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let fields: Vec<&str> = s.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
        }
        let frame: u64 = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad frame index '{}'", fields[0])))?;
        let row: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad row '{}'", fields[1])))?;
        let col: usize = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad column '{}'", fields[2])))?;
        if let Some((height, width)) = bounds {
            if row >= height || col >= width {
                return Err(Error::FixationOutOfBounds {
                    path: path.to_path_buf(),
                    line,
                    row,
                    col,
                    height,
                    width,
                });
            }
        }
        out.entry(frame).or_default().points.push((row, col));
    }
    Ok(out)
}

pub fn load_fixations(path: &Path, bounds: Option<(usize, usize)>) -> Result<FixationsByFrame> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fixations(&text, path, bounds)
}

pub fn format_fixations(fixations: &FixationsByFrame) -> String {
    let mut out = String::from("# frame_index,row,col\n");
    for (frame, set) in fixations {
        for &(r, c) in &set.points {
            out.push_str(&format!("{frame},{r},{c}\n"));
        }
    }
    out
}
