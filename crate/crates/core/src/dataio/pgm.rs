//! Binary PGM (P5) reading and writing, plus 8-bit grayscale PNG export.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmDepth {
    Eight,
    #[default]
    Sixteen,
}

impl PgmDepth {
    pub fn maxval(self) -> u32 {
        match self {
            PgmDepth::Eight => 255,
            PgmDepth::Sixteen => 65535,
        }
    }
}

fn quantize(v: f64, maxval: u32) -> u32 {
    (v.clamp(0.0, 1.0) * maxval as f64).round() as u32
}

/// P5 bytes for `img`; values are clamped to `[0, 1]` first.
pub fn encode_pgm(img: &Image, depth: PgmDepth) -> Vec<u8> {
    let d = img.side();
    let maxval = depth.maxval();
    let mut out = format!("P5\n{d} {d}\n{maxval}\n").into_bytes();
    for &v in img.data() {
        let q = quantize(v, maxval);
        match depth {
            PgmDepth::Eight => out.push(q as u8),
            PgmDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("PGM header: missing {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::Format(format!(
            "PGM magic {magic:?}; only binary P5 is supported"
        )));
    }
    let mut header = HeaderReader { bytes, pos: 2 };
    let width = header.number("width")? as usize;
    let height = header.number("height")? as usize;
    let maxval = header.number("maxval")?;
    if width != height || width == 0 {
        return Err(Error::Format(format!(
            "PGM is {width}x{height}; only non-empty square images are supported"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!(
            "PGM maxval {maxval} outside [1, 65535]"
        )));
    }
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => {
            return Err(Error::Format(
                "PGM header not terminated by whitespace".into(),
            ))
        }
    }
    let data = &bytes[header.pos + 1..];
    let wide = maxval > 255;
    let expected = width * height * if wide { 2 } else { 1 };
    if data.len() < expected {
        return Err(Error::Length {
            expected: header.pos + 1 + expected,
            actual: bytes.len(),
        });
    }
    let scale = 1.0 / maxval as f64;
    let pixels = if wide {
        data[..expected]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64 * scale)
            .collect()
    } else {
        data[..expected].iter().map(|&b| b as f64 * scale).collect()
    };
    Ok(Image::from_raw(width, pixels))
}

pub fn write_pgm(img: &Image, path: impl AsRef<Path>, depth: PgmDepth) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(img, depth)).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

/// All `*.pgm` files of a directory, in file-name order.
pub fn read_pgm_dir(dir: impl AsRef<Path>) -> Result<Vec<Image>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|ext| ext.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    paths.sort();
    paths.iter().map(read_pgm).collect()
}

/// 8-bit grayscale PNG.
pub fn write_png(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let d = img.side() as u32;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), d, d);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let pixels: Vec<u8> = img.data().iter().map(|&v| quantize(v, 255) as u8).collect();
    encoder
        .write_header()
        .and_then(|mut w| w.write_image_data(&pixels))
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}
