//! Little-endian binary containers shared by every tool.
//!
//! Feature file (`FVCF`):
//!
//! ```text
//! magic "FVCF" | version u16 | rows u32 | cols u32 | window_ms f64 | hop_ms f64
//! rows × cols f32, row-major
//! crc32 u32
//! ```
//!
//! Model file (`FVCM`):
//!
//! ```text
//! magic "FVCM" | version u16 | n_tensors u32
//! per tensor: name_len u32 | name utf-8 | rank u32 | dims u32 × rank | f32 payload
//! n_meta u32
//! per entry: key_len u32 | key utf-8 | value_len u32 | value utf-8
//! crc32 u32
//! ```
//!
//! The trailing CRC-32 (IEEE) covers every preceding byte. Payloads are
//! single precision; values already representable in `f32` round-trip
//! exactly.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dsp::FrameGrid;
use crate::error::{Error, Result};
use crate::nn::Tensor2;

pub const FEATURE_MAGIC: &[u8; 4] = b"FVCF";
pub const MODEL_MAGIC: &[u8; 4] = b"FVCM";
pub const FORMAT_VERSION: u16 = 1;
pub const FEATURE_HEADER_LEN: usize = 4 + 2 + 4 + 4 + 8 + 8;
pub const CHECKSUM_LEN: usize = 4;

const MAX_NAME_LEN: usize = 4096;
const MAX_RANK: usize = 8;

/// A feature matrix with the frame layout it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub matrix: Tensor2,
    pub window_ms: f64,
    pub hop_ms: f64,
}

impl FeatureFile {
    pub fn new(matrix: Tensor2, grid: &FrameGrid) -> Self {
        Self {
            matrix,
            window_ms: grid.window_ms,
            hop_ms: grid.hop_ms,
        }
    }

    pub fn grid(&self) -> Result<FrameGrid> {
        FrameGrid::with_frames(self.window_ms, self.hop_ms, self.matrix.rows())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.matrix;
        let mut out = Vec::with_capacity(FEATURE_HEADER_LEN + 4 * m.len());
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
        out.extend_from_slice(&self.window_ms.to_le_bytes());
        out.extend_from_slice(&self.hop_ms.to_le_bytes());
        for &v in m.as_slice() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        seal(out)
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let fail = |message: String| Error::Format {
            path: origin.to_string(),
            message,
        };
        let bytes = unseal(bytes, FEATURE_MAGIC, origin)?;
        let mut r = Reader::new(bytes, origin);
        r.take(4)?;
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(fail(format!("unsupported version {version}")));
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let window_ms = r.f64()?;
        let hop_ms = r.f64()?;
        if !(window_ms.is_finite() && hop_ms.is_finite() && hop_ms > 0.0 && window_ms >= hop_ms) {
            return Err(fail(format!(
                "invalid frame layout: window {window_ms} ms, hop {hop_ms} ms"
            )));
        }
        let expected = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(FEATURE_HEADER_LEN))
            .ok_or_else(|| fail(format!("dimensions {rows} x {cols} overflow")))?;
        if bytes.len() != expected {
            return Err(fail(format!(
                "expected {expected} bytes for {rows} x {cols} payload, found {}",
                bytes.len()
            )));
        }
        let data = r.f32s(rows * cols)?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(fail("payload contains non-finite values".into()));
        }
        Ok(Self {
            matrix: Tensor2::from_vec(rows, cols, data)?,
            window_ms,
            hop_ms,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }
}

/// Named tensors plus string metadata, in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelFile {
    pub tensors: Vec<(String, Tensor2)>,
    pub metadata: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor2) {
        self.tensors.push((name.into(), tensor));
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor2> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::Format {
                path: "model".into(),
                message: format!("missing tensor {name:?}"),
            })
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.metadata
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format {
                path: "model".into(),
                message: format!("missing metadata key {key:?}"),
            })
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| Error::Format {
            path: "model".into(),
            message: format!("metadata {key:?} has unparseable value {raw:?}"),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            put_str(&mut out, name);
            out.extend_from_slice(&2u32.to_le_bytes());
            out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
            for &v in t.as_slice() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        for (k, v) in &self.metadata {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }
        seal(out)
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let fail = |message: String| Error::Format {
            path: origin.to_string(),
            message,
        };
        let bytes = unseal(bytes, MODEL_MAGIC, origin)?;
        let mut r = Reader::new(bytes, origin);
        r.take(4)?;
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(fail(format!("unsupported version {version}")));
        }
        let n_tensors = r.u32()? as usize;
        let mut model = ModelFile::default();
        for i in 0..n_tensors {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            if rank == 0 || rank > MAX_RANK {
                return Err(fail(format!("tensor {i} ({name:?}) has rank {rank}")));
            }
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.u32()? as usize);
            }
            let count = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| fail(format!("tensor {name:?} dimensions {dims:?} overflow")))?;
            let data = r.f32s(count)?;
            if data.iter().any(|v| !v.is_finite()) {
                return Err(fail(format!("tensor {name:?} contains non-finite values")));
            }
            // rank-1 tensors load as a single row; higher ranks fold into rows
            let cols = *dims.last().unwrap();
            let rows = count.checked_div(cols).unwrap_or(0);
            model.push(name, Tensor2::from_vec(rows, cols, data)?);
        }
        let n_meta = r.u32()? as usize;
        for _ in 0..n_meta {
            let k = r.string()?;
            let v = r.string()?;
            model.metadata.insert(k, v);
        }
        if r.remaining() != 0 {
            return Err(fail(format!("{} trailing bytes after metadata", r.remaining())));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, &path.display().to_string()).map_err(|e| match e {
            Error::Format { message, .. } => Error::Format {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }
}

fn seal(mut body: Vec<u8>) -> Vec<u8> {
    let crc = crc32fast::hash(&body);
    body.extend_from_slice(&crc.to_le_bytes());
    body
}

/// Checks magic and checksum, returning the bytes the checksum covers.
fn unseal<'a>(bytes: &'a [u8], magic: &[u8; 4], origin: &str) -> Result<&'a [u8]> {
    let fail = |message: String| Error::Format {
        path: origin.to_string(),
        message,
    };
    if bytes.len() < magic.len() {
        return Err(fail(format!("truncated: {} bytes is shorter than the magic", bytes.len())));
    }
    if &bytes[..4] != magic {
        let expected = String::from_utf8_lossy(magic);
        return Err(fail(format!("bad magic {:?}, expected {expected:?}", &bytes[..4])));
    }
    if bytes.len() < magic.len() + CHECKSUM_LEN {
        return Err(fail(format!("truncated: {} bytes leaves no room for the checksum", bytes.len())));
    }
    let (body, tail) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(fail(format!(
            "checksum mismatch (stored {stored:08x}, computed {actual:08x}); file is corrupt or truncated"
        )));
    }
    Ok(body)
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    origin: &'a str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], origin: &'a str) -> Self {
        Self {
            bytes,
            pos: 0,
            origin,
        }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Format {
                path: self.origin.to_string(),
                message: format!(
                    "truncated: needed {n} bytes at offset {}, only {} available",
                    self.pos,
                    self.remaining()
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n.checked_mul(4).ok_or_else(|| Error::Format {
            path: self.origin.to_string(),
            message: format!("payload of {n} values overflows"),
        })?;
        let raw = self.take(len)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        if len > MAX_NAME_LEN {
            return Err(Error::Format {
                path: self.origin.to_string(),
                message: format!("string length {len} exceeds {MAX_NAME_LEN}"),
            });
        }
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Format {
            path: self.origin.to_string(),
            message: "string is not valid utf-8".into(),
        })
    }
}
