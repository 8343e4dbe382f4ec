//! Binary containers and CSV exporters.
//!
//! Tensor container (`.impt`), all integers little-endian:
//!
//! ```text
//! b"IMPT" | version: u32 = 1 | freq: u32 | time: u32 | maps: u32 | f64 × (freq·time·maps)
//! ```
//!
//! Values follow the tensor linear order (frequency fastest).
//!
//! Feature archive (`.impf`), one record per utterance:
//!
//! ```text
//! b"IMPF" | version: u32 = 1 | count: u32
//! repeat count × { id_len: u32 | id: utf-8 bytes | frames: u32 | dims: u32 | f64 × (frames·dims) }
//! ```
//!
//! Feature values are time-major with the feature dimension fastest.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

const TENSOR_MAGIC: &[u8; 4] = b"IMPT";
const ARCHIVE_MAGIC: &[u8; 4] = b"IMPF";
const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn to_u32(v: usize, what: &'static str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::format(what, format!("{v} does not fit in u32")))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.what, format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::format(self.what, "length overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(Error::format(self.what, "bad magic"));
        }
        let version = self.u32()?;
        if version != VERSION {
            return Err(Error::format(self.what, format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(self.what, "trailing bytes"));
        }
        Ok(())
    }
}

pub fn encode_tensor<S: Scalar>(t: &Tensor<S>) -> Result<Vec<u8>> {
    let s = t.shape();
    let mut out = Vec::with_capacity(20 + 8 * t.len());
    out.extend_from_slice(TENSOR_MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, to_u32(s.freq_bins(), "tensor container")?);
    put_u32(&mut out, to_u32(s.time_steps(), "tensor container")?);
    put_u32(&mut out, to_u32(s.maps(), "tensor container")?);
    put_f64s(&mut out, t.data().iter().map(|v| v.as_f64()));
    Ok(out)
}

pub fn decode_tensor<S: Scalar>(bytes: &[u8]) -> Result<Tensor<S>> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        what: "tensor container",
    };
    cur.header(TENSOR_MAGIC)?;
    let (f, t, m) = (cur.u32()?, cur.u32()?, cur.u32()?);
    let shape = Shape::new(f as usize, t as usize, m as usize)?;
    let values = cur.f64s(shape.len())?;
    cur.finish()?;
    Tensor::from_vec(shape, values.into_iter().map(S::of).collect())
}

pub fn write_tensor<S: Scalar>(path: impl AsRef<Path>, t: &Tensor<S>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tensor(t)?).map_err(|e| Error::io(path, e))
}

pub fn read_tensor<S: Scalar>(path: impl AsRef<Path>) -> Result<Tensor<S>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}

/// One line per (map, frequency) row: `map,freq,v(t=0),v(t=1),...`.
pub fn tensor_csv<S: Scalar>(t: &Tensor<S>) -> String {
    let s = t.shape();
    let mut out = String::from("map,freq");
    for j in 0..s.time_steps() {
        out.push_str(&format!(",t{j}"));
    }
    out.push('\n');
    for m in 0..s.maps() {
        for f in 0..s.freq_bins() {
            out.push_str(&format!("{m},{f}"));
            for j in 0..s.time_steps() {
                out.push_str(&format!(",{}", t.get(f, j, m)));
            }
            out.push('\n');
        }
    }
    out
}

pub fn encode_archive(entries: &[(String, FeatureMatrix)]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(ARCHIVE_MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, to_u32(entries.len(), "feature archive")?);
    for (id, feat) in entries {
        put_u32(&mut out, to_u32(id.len(), "feature archive")?);
        out.extend_from_slice(id.as_bytes());
        put_u32(&mut out, to_u32(feat.frames(), "feature archive")?);
        put_u32(&mut out, to_u32(feat.dims(), "feature archive")?);
        put_f64s(&mut out, feat.data().iter().copied());
    }
    Ok(out)
}

pub fn decode_archive(bytes: &[u8]) -> Result<Vec<(String, FeatureMatrix)>> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        what: "feature archive",
    };
    cur.header(ARCHIVE_MAGIC)?;
    let count = cur.u32()? as usize;
    let mut entries = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let id_len = cur.u32()? as usize;
        let id = std::str::from_utf8(cur.take(id_len)?)
            .map_err(|_| Error::format("feature archive", "utterance id is not utf-8"))?
            .to_string();
        let frames = cur.u32()? as usize;
        let dims = cur.u32()? as usize;
        let n = frames
            .checked_mul(dims)
            .ok_or_else(|| Error::format("feature archive", "size overflow"))?;
        let data = cur.f64s(n)?;
        entries.push((id, FeatureMatrix::new(dims, data)?));
    }
    cur.finish()?;
    Ok(entries)
}

pub fn write_archive(path: impl AsRef<Path>, entries: &[(String, FeatureMatrix)]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_archive(entries)?;
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<Vec<(String, FeatureMatrix)>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_archive(&bytes)
}

/// One line per frame: `utt_id,frame,c0,c1,...`.
pub fn archive_csv(entries: &[(String, FeatureMatrix)]) -> String {
    let dims = entries.first().map_or(0, |(_, f)| f.dims());
    let mut out = String::from("utt_id,frame");
    for d in 0..dims {
        out.push_str(&format!(",c{d}"));
    }
    out.push('\n');
    for (id, feat) in entries {
        for (i, frame) in feat.iter_frames().enumerate() {
            out.push_str(&format!("{id},{i}"));
            for v in frame {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Writes to a sibling temp file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
