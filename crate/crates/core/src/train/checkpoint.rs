//! Binary checkpoint format (all integers little-endian):
//!
//! ```text
//! "TSAL"  u16 version=1  u8 variant  u16 hidden_channels  u32 tensor_count
//! tensor_count x { u16 name_len, name (UTF-8), 4 x u32 dims, f32 data }
//! u32 buffer_count (0 or tensor_count)
//! buffer_count x { same tensor layout, names prefixed "momentum." }
//! u32 CRC-32 of every preceding byte
//! ```
//!
//! Parameters are stored at 32-bit precision.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::net::{AdaptationModel, ParamInfo, Variant};

use super::optim::OptimizerState;

pub const MAGIC: &[u8; 4] = b"TSAL";
pub const VERSION: u16 = 1;
const MOMENTUM_PREFIX: &str = "momentum.";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: AdaptationModel,
    /// Momentum buffers in parameter order, when the optimizer was saved.
    pub momentum: Option<Vec<Vec<f64>>>,
}

fn put_tensor(buf: &mut Vec<u8>, name: &str, dims: [usize; 4], values: &[f64]) {
    buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
    buf.extend_from_slice(name.as_bytes());
    for d in dims {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// Serializes a model and optional optimizer state.
pub fn encode_checkpoint(model: &AdaptationModel, optimizer: Option<&OptimizerState>) -> Vec<u8> {
    let infos = model.param_info();
    let params = model.params();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(model.variant.code());
    buf.extend_from_slice(&(model.hidden as u16).to_le_bytes());
    buf.extend_from_slice(&(infos.len() as u32).to_le_bytes());
    for (info, values) in infos.iter().zip(&params) {
        put_tensor(&mut buf, &info.name, info.dims, values);
    }
    match optimizer {
        Some(opt) => {
            buf.extend_from_slice(&(infos.len() as u32).to_le_bytes());
            for (info, values) in infos.iter().zip(&opt.momentum_buffers) {
                put_tensor(&mut buf, &format!("{MOMENTUM_PREFIX}{}", info.name), info.dims, values);
            }
        }
        None => buf.extend_from_slice(&0u32.to_le_bytes()),
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

/// Writes atomically: the bytes go to a sibling temp file that is then renamed.
pub fn save_checkpoint(
    model: &AdaptationModel,
    optimizer: Option<&OptimizerState>,
    path: &Path,
) -> Result<()> {
    let bytes = encode_checkpoint(model, optimizer);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCheckpoint(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn tensor(&mut self, expected_name: &str, info: &ParamInfo) -> Result<Vec<f64>> {
        let len = self.u16()? as usize;
        let name = std::str::from_utf8(self.take(len)?)
            .map_err(|_| corrupt("tensor name is not UTF-8"))?;
        if name != expected_name {
            return Err(corrupt(format!("expected tensor '{expected_name}', found '{name}'")));
        }
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = self.u32()? as usize;
        }
        if dims != info.dims {
            return Err(corrupt(format!(
                "tensor '{name}' has dims {dims:?}, expected {:?}",
                info.dims
            )));
        }
        let n: usize = dims.iter().product();
        let raw = self.take(n * 4)?;
        let values: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(corrupt(format!("tensor '{name}' holds non-finite values")));
        }
        Ok(values)
    }
}

/// Parses and validates checkpoint bytes.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 4 + 2 + 1 + 2 + 4 + 4 + 4 {
        return Err(corrupt(format!("truncated: only {} bytes", bytes.len())));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if &body[..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let stored_crc = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(corrupt("CRC mismatch (truncated or damaged file)"));
    }
    let mut r = Reader { bytes: body, pos: 4 };
    let version = r.u16()?;
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let code = r.u8()?;
    let variant =
        Variant::from_code(code).ok_or_else(|| corrupt(format!("unknown variant byte {code}")))?;
    let hidden = r.u16()? as usize;
    if hidden == 0 {
        return Err(corrupt("hidden channel count is zero"));
    }
    let mut model = AdaptationModel::zeros(variant, hidden);
    let infos = model.param_info();
    let count = r.u32()? as usize;
    if count != infos.len() {
        return Err(corrupt(format!(
            "{count} tensors, a {variant} model has {}",
            infos.len()
        )));
    }
    let values = infos
        .iter()
        .map(|info| r.tensor(&info.name, info))
        .collect::<Result<Vec<_>>>()?;
    for (dst, src) in model.params_mut().into_iter().zip(&values) {
        dst.copy_from_slice(src);
    }
    let momentum = match r.u32()? as usize {
        0 => None,
        n if n == infos.len() => Some(
            infos
                .iter()
                .map(|info| r.tensor(&format!("{MOMENTUM_PREFIX}{}", info.name), info))
                .collect::<Result<Vec<_>>>()?,
        ),
        n => return Err(corrupt(format!("{n} optimizer buffers for {} tensors", infos.len()))),
    };
    if r.pos != body.len() {
        return Err(corrupt(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(Checkpoint { model, momentum })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

/// Loads a checkpoint and insists on a particular variant.
pub fn load_checkpoint_as(path: &Path, variant: Variant) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    if ckpt.model.variant != variant {
        return Err(corrupt(format!(
            "variant mismatch: file holds a {} model, expected {variant}",
            ckpt.model.variant
        )));
    }
    Ok(ckpt)
}
