//! Portable graymap (P5 binary / P2 text, maxval 255) for saliency maps.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::SaliencyMap;

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    /// Offset of the first raster byte (P5) or of the first sample token (P2).
    data_start: usize,
}

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::BadHeader {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Skips whitespace and `#` comments; returns the next token and the offset after it.
fn next_token(bytes: &[u8], mut pos: usize) -> Option<(&[u8], usize)> {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        break;
    }
    let start = pos;
    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    (pos > start).then(|| (&bytes[start..pos], pos))
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<(Header, u32)> {
    let (magic, pos) = next_token(bytes, 0).ok_or_else(|| bad(path, "empty file"))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(bad(
                path,
                format!("magic '{}' is not P5 or P2", String::from_utf8_lossy(other)),
            ))
        }
    };
    let mut pos = pos;
    let mut fields = [0u32; 3];
    for (field, name) in fields.iter_mut().zip(["width", "height", "maxval"]) {
        let (tok, next) = next_token(bytes, pos).ok_or_else(|| bad(path, format!("missing {name}")))?;
        *field = std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(path, format!("{name} is not a number")))?;
        pos = next;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(bad(path, "zero width or height"));
    }
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(Error::TruncatedData(path.to_path_buf()));
        }
        pos += 1;
    }
    Ok((
        Header {
            binary,
            width: width as usize,
            height: height as usize,
            data_start: pos,
        },
        maxval,
    ))
}

/// Decodes PGM bytes; values are scaled to `[0, 1]` by dividing by 255.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<SaliencyMap> {
    let (h, maxval) = parse_header(bytes, path)?;
    if maxval != 255 {
        return Err(Error::UnsupportedDepth {
            path: path.to_path_buf(),
            maxval,
        });
    }
    let n = h.width * h.height;
    let raw: Vec<u8> = if h.binary {
        let data = &bytes[h.data_start..];
        if data.len() < n {
            return Err(Error::TruncatedData(path.to_path_buf()));
        }
        data[..n].to_vec()
    } else {
        let mut out = Vec::with_capacity(n);
        let mut pos = h.data_start;
        while out.len() < n {
            let (tok, next) = next_token(bytes, pos).ok_or_else(|| Error::TruncatedData(path.to_path_buf()))?;
            let v: u32 = std::str::from_utf8(tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad(path, format!("sample {} is not a number", out.len())))?;
            if v > 255 {
                return Err(bad(path, format!("sample {v} exceeds maxval 255")));
            }
            out.push(v as u8);
            pos = next;
        }
        out
    };
    SaliencyMap::new(h.height, h.width, raw.iter().map(|&b| b as f64 / 255.0).collect())
}

pub fn load_map(path: &Path) -> Result<SaliencyMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, path)
}

/// `round(v * 255)` with halves rounded up; values outside `[0, 1]` are rejected.
pub fn quantize(v: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(v));
    }
    Ok((v * 255.0 + 0.5).floor().min(255.0) as u8)
}

/// Binary P5 encoding of a map whose values lie in `[0, 1]`.
pub fn encode_pgm(map: &SaliencyMap) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    for &v in map.values() {
        out.push(quantize(v)?);
    }
    Ok(out)
}

pub fn write_map(map: &SaliencyMap, path: &Path) -> Result<()> {
    let bytes = encode_pgm(map)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
