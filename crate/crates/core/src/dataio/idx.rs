//! IDX image files (the MNIST family), optionally gzip-compressed.
//!
//! Layout: magic `00 00 08 03` (unsigned bytes, rank 3), then count, rows
//! and cols as big-endian `u32`, then `count * rows * cols` pixel bytes.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::image::Image;

const MAGIC: [u8; 4] = [0x00, 0x00, 0x08, 0x03];
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxDataset {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub items: Vec<Image>,
}

fn read_u32(bytes: &[u8], offset: usize) -> usize {
    u32::from_be_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes")) as usize
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

/// Parses an IDX rank-3 unsigned-byte stream; pixel `v` maps to `v / 255`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxDataset> {
    if is_gzip(bytes) {
        let mut raw = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut raw)
            .map_err(|e| Error::Format(format!("gzip stream: {e}")))?;
        return parse_raw(&raw);
    }
    parse_raw(bytes)
}

fn parse_raw(bytes: &[u8]) -> Result<IdxDataset> {
    if bytes.len() < MAGIC.len() {
        return Err(Error::Length {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format(format!(
            "IDX magic {:02x} {:02x} {:02x} {:02x}, expected 00 00 08 03 (unsigned byte images)",
            bytes[0], bytes[1], bytes[2], bytes[3]
        )));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Length {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let count = read_u32(bytes, 4);
    let rows = read_u32(bytes, 8);
    let cols = read_u32(bytes, 12);
    if rows != cols || rows == 0 {
        return Err(Error::Format(format!(
            "IDX items are {rows}x{cols}; only non-empty square images are supported"
        )));
    }
    let payload = count
        .checked_mul(rows * cols)
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let expected = HEADER_LEN + payload;
    if bytes.len() != expected {
        return Err(Error::Length {
            expected,
            actual: bytes.len(),
        });
    }
    let items = bytes[HEADER_LEN..]
        .chunks_exact(rows * cols)
        .map(|chunk| Image::from_raw(rows, chunk.iter().map(|&b| b as f64 / 255.0).collect()))
        .collect();
    Ok(IdxDataset {
        count,
        rows,
        cols,
        items,
    })
}

pub fn read_idx_images(path: impl AsRef<Path>) -> Result<IdxDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_idx_images(&bytes)
}

/// Serializes images as an uncompressed IDX stream, quantizing to bytes.
pub fn encode_idx_images(items: &[Image]) -> Result<Vec<u8>> {
    let side = items.first().map_or(0, Image::side);
    let mut out = Vec::with_capacity(HEADER_LEN + items.len() * side * side);
    out.extend_from_slice(&MAGIC);
    for dim in [items.len(), side, side] {
        out.extend_from_slice(&(dim as u32).to_be_bytes());
    }
    for img in items {
        img.check_side(side)?;
        out.extend(
            img.data()
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
    }
    Ok(out)
}
