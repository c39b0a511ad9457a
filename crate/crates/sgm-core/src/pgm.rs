//! Depth images as binary 16-bit PGM (`P5`), sample values in millimeters.
//!
//! The decoder is strict: two-byte samples only, exact raster length, and a
//! pixel cap so hostile headers cannot request absurd allocations.

use crate::error::{Error, Result};

/// Largest accepted width * height; far above any real capture, far below an
/// allocation bomb.
pub const MAX_PIXELS: usize = 1 << 24;

/// A decoded depth image. Samples are millimeters, row-major, top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::parse("depth image", "zero width or height"));
        }
        let pixels = width
            .checked_mul(height)
            .filter(|&p| p <= MAX_PIXELS)
            .ok_or_else(|| Error::parse("depth image", "image too large"))?;
        if data.len() != pixels {
            return Err(Error::dims(
                "depth image raster",
                pixels,
                data.len(),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw sample in millimeters.
    pub fn depth_mm(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    /// Sample converted to meters.
    pub fn depth_m(&self, x: usize, y: usize) -> f64 {
        f64::from(self.depth_mm(x, y)) / 1000.0
    }

    /// Decode a binary PGM. Requires magic `P5`, a maxval above 255 (two-byte
    /// samples), and a raster of exactly `width * height` big-endian u16s.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let magic = next_token(bytes, &mut pos)
            .ok_or_else(|| Error::parse("pgm header", "missing magic"))?;
        if magic != b"P5" {
            return Err(Error::parse(
                "pgm header",
                format!("expected magic P5, got {:?}", String::from_utf8_lossy(magic)),
            ));
        }
        let width = parse_dim(bytes, &mut pos, "width")?;
        let height = parse_dim(bytes, &mut pos, "height")?;
        let maxval = parse_dim(bytes, &mut pos, "maxval")?;
        if !(256..=65535).contains(&maxval) {
            return Err(Error::parse(
                "pgm header",
                format!("need a 16-bit maxval in 256..=65535, got {maxval}"),
            ));
        }
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => {
                return Err(Error::parse(
                    "pgm header",
                    "expected single whitespace before raster",
                ))
            }
        }
        let pixels = width
            .checked_mul(height)
            .filter(|&p| p <= MAX_PIXELS)
            .ok_or_else(|| Error::parse("pgm header", "image too large"))?;
        let raster = &bytes[pos..];
        if raster.len() != pixels * 2 {
            return Err(Error::dims("pgm raster bytes", pixels * 2, raster.len()));
        }
        let data = raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        Self::new(width, height, data)
    }

    /// Encode back to binary PGM with maxval 65535.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for &sample in &self.data {
            out.extend_from_slice(&sample.to_be_bytes());
        }
        out
    }
}

/// Advance past whitespace and `#` comments, then return the next token.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while bytes.get(*pos).is_some_and(|b| b.is_ascii_whitespace()) {
            *pos += 1;
        }
        if bytes.get(*pos) == Some(&b'#') {
            while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while bytes
        .get(*pos)
        .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
    {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

fn parse_dim(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let token = next_token(bytes, pos)
        .ok_or_else(|| Error::parse("pgm header", format!("missing {what}")))?;
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| {
            Error::parse(
                "pgm header",
                format!("bad {what}: {:?}", String::from_utf8_lossy(token)),
            )
        })
}
