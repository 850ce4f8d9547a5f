//! RLAB binary layout (all integers little-endian u32):
//!
//! ```text
//! "RLAB" version=1 n C_in H W num_classes
//! n × { C_in·H·W f32 pixels, u32 label }
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Dataset, Sample};
use crate::diffcore::Tensor;
use crate::error::{Error, ParseErrorKind, Result};

pub const MAGIC: &[u8; 4] = b"RLAB";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 6 * 4;

/// Serializes raw (image, label) records; values are stored as f32.
/// Attribution dumps use this directly since they are not confined to [0, 1].
pub fn write_rlab(path: &Path, shape: [usize; 3], num_classes: usize, records: &[(&Tensor, usize)]) -> Result<()> {
    let per: usize = shape.iter().product();
    let mut buf = Vec::with_capacity(HEADER_LEN + records.len() * (per + 1) * 4);
    buf.extend_from_slice(MAGIC);
    for v in [VERSION as usize, records.len(), shape[0], shape[1], shape[2], num_classes] {
        let v = u32::try_from(v).map_err(|_| Error::invalid(format!("dimension {v} does not fit in u32")))?;
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for (image, label) in records {
        if image.len() != per {
            return Err(Error::ShapeMismatch { expected: shape.to_vec(), got: image.shape().to_vec() });
        }
        for &v in image.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        buf.extend_from_slice(&(*label as u32).to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Parsed RLAB contents without the [0, 1] range check of [`Dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct RlabContents {
    pub shape: [usize; 3],
    pub num_classes: usize,
    pub records: Vec<(Tensor, usize)>,
}

pub fn read_rlab(bytes: &[u8]) -> Result<RlabContents> {
    let truncated = |offset: usize| Error::Parse { offset: offset as u64, kind: ParseErrorKind::Truncated };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Parse { offset: 0, kind: ParseErrorKind::BadMagic });
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(bytes.len()));
    }
    let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    if field(0) != VERSION {
        return Err(Error::Parse { offset: 4, kind: ParseErrorKind::UnsupportedVersion });
    }
    let (n, c, h, w, classes) = (field(1) as u64, field(2) as u64, field(3) as u64, field(4) as u64, field(5));
    let overflow = |offset: usize| Error::Parse { offset: offset as u64, kind: ParseErrorKind::DimensionOverflow };
    if c == 0 || h == 0 || w == 0 {
        return Err(overflow(12));
    }
    let per = c.checked_mul(h).and_then(|v| v.checked_mul(w)).ok_or_else(|| overflow(12))?;
    let record_len = per.checked_mul(4).and_then(|v| v.checked_add(4)).ok_or_else(|| overflow(12))?;
    let body = n.checked_mul(record_len).ok_or_else(|| overflow(8))?;
    let total = body.checked_add(HEADER_LEN as u64).ok_or_else(|| overflow(8))?;
    if total > usize::MAX as u64 {
        return Err(overflow(8));
    }
    if (bytes.len() as u64) < total {
        return Err(truncated(bytes.len()));
    }
    if (bytes.len() as u64) > total {
        return Err(Error::Parse { offset: total, kind: ParseErrorKind::TrailingBytes });
    }
    let (per, record_len) = (per as usize, record_len as usize);
    let shape = [c as usize, h as usize, w as usize];
    let mut records = Vec::with_capacity(n as usize);
    for chunk in bytes[HEADER_LEN..].chunks_exact(record_len) {
        let pixels = chunk[..per * 4]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
            .collect();
        let label = u32::from_le_bytes(chunk[per * 4..].try_into().expect("4 bytes")) as usize;
        records.push((Tensor::new(shape.to_vec(), pixels)?, label));
    }
    Ok(RlabContents { shape, num_classes: classes as usize, records })
}

pub fn save(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let records: Vec<(&Tensor, usize)> = dataset.samples().iter().map(|s| (&s.image, s.label)).collect();
    write_rlab(path.as_ref(), dataset.image_shape(), dataset.num_classes(), &records)
}

pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let contents = read_rlab(&bytes)?;
    let samples = contents.records.into_iter().map(|(image, label)| Sample { image, label }).collect();
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Dataset::new(samples, contents.num_classes, name, 0)
}

/// One row per sample: label, then pixels in row-major order.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for s in dataset.samples() {
        out.push_str(&s.label.to_string());
        for v in s.image.data() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
