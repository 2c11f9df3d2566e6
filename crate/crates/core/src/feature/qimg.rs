//! Binary feature record: one pure-quaternion image per utterance.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "QIMG"
//! 4       4     format version (u32, currently 1)
//! 8       4     height (u32)
//! 12      4     width (u32)
//! 16      4     channels (u32)
//! 20      ...   height·width·channels pixels in row-major order
//!               (row, then column, then channel), each pixel three f64:
//!               i, j, k
//! ```
//!
//! The real components are zero by construction and are not stored.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::quat::Quaternion;

use super::image::QuaternionImage;

pub const QIMG_MAGIC: &[u8; 4] = b"QIMG";
pub const QIMG_VERSION: u32 = 1;

pub fn write_qimg(path: &Path, img: &QuaternionImage) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + img.pixels().len() * 24);
    encode_qimg(img, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn encode_qimg(img: &QuaternionImage, out: &mut Vec<u8>) -> Result<()> {
    if !img.is_pure() {
        return Err(Error::Input(
            "feature record only stores pure quaternions; found nonzero real part".into(),
        ));
    }
    out.extend_from_slice(QIMG_MAGIC);
    out.extend_from_slice(&QIMG_VERSION.to_le_bytes());
    out.extend_from_slice(&(img.height as u32).to_le_bytes());
    out.extend_from_slice(&(img.width as u32).to_le_bytes());
    out.extend_from_slice(&(img.channels as u32).to_le_bytes());
    for q in img.pixels() {
        out.extend_from_slice(&q.i.to_le_bytes());
        out.extend_from_slice(&q.j.to_le_bytes());
        out.extend_from_slice(&q.k.to_le_bytes());
    }
    Ok(())
}

pub fn read_qimg(path: &Path) -> Result<QuaternionImage> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_qimg(&bytes).map_err(|e| match e {
        Error::Compatibility(msg) => Error::Compatibility(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn decode_qimg(bytes: &[u8]) -> Result<QuaternionImage> {
    if bytes.len() < 20 {
        return Err(Error::Compatibility("truncated feature record".into()));
    }
    if &bytes[0..4] != QIMG_MAGIC {
        return Err(Error::Compatibility("bad magic, not a QIMG record".into()));
    }
    let u32_at =
        |offset: usize| u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());

    let version = u32_at(4);
    if version != QIMG_VERSION {
        return Err(Error::Compatibility(format!(
            "unsupported QIMG version {version} (supported: {QIMG_VERSION})"
        )));
    }
    let height = u32_at(8) as usize;
    let width = u32_at(12) as usize;
    let channels = u32_at(16) as usize;

    let n = height
        .checked_mul(width)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Error::Compatibility("absurd dimensions in header".into()))?;
    let payload = &bytes[20..];
    if payload.len() != n * 24 {
        return Err(Error::Compatibility(format!(
            "payload is {} bytes, header implies {}",
            payload.len(),
            n * 24
        )));
    }

    let mut pixels = Vec::with_capacity(n);
    for chunk in payload.chunks_exact(24) {
        let i = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let j = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        let k = f64::from_le_bytes(chunk[16..24].try_into().unwrap());
        pixels.push(Quaternion::pure(i, j, k));
    }
    QuaternionImage::from_pixels(height, width, channels, pixels)
}

/// Writes through a temp file then renames, so readers never observe a
/// half-written record.
pub fn write_qimg_atomic(path: &Path, img: &QuaternionImage) -> Result<()> {
    let tmp = path.with_extension("qimg.tmp");
    {
        let mut buf = Vec::with_capacity(20 + img.pixels().len() * 24);
        encode_qimg(img, &mut buf)?;
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
