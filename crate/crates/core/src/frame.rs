//! Decoded RGB frames and the binary PPM (P6) codec used for frame
//! directories and thumbnails.

use std::io::{self, Write};

#[derive(Debug, thiserror::Error)]
pub enum PpmError {
    #[error("unsupported PPM variant {0:?}, only binary P6 is accepted")]
    UnsupportedFormat(String),
    #[error("malformed PPM header: {0}")]
    Header(&'static str),
    #[error("unsupported maxval {0}, expected 255")]
    MaxVal(u32),
    #[error("pixel data truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

#[derive(Debug, thiserror::Error)]
#[error("pixel buffer of {len} bytes does not match {width}x{height} RGB")]
pub struct FrameSizeError {
    pub width: u32,
    pub height: u32,
    pub len: usize,
}

/// An 8-bit RGB image stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, FrameSizeError> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize * 3 {
            return Err(FrameSizeError {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Frame {
            width,
            height,
            pixels,
        })
    }

    /// A frame filled with one color.
    pub fn solid(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Frame {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Per-pixel luma `0.299 R + 0.587 G + 0.114 B` on the 0..=255 scale.
    pub fn luma(&self) -> Vec<f64> {
        self.pixels
            .chunks_exact(3)
            .map(|p| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
            .collect()
    }

    /// Nearest-neighbour downscale so the longest edge is at most `max_edge`.
    /// Frames already within bounds are returned unchanged.
    pub fn scaled_to_fit(&self, max_edge: u32) -> Frame {
        let max_edge = max_edge.max(1);
        let longest = self.width.max(self.height);
        if longest <= max_edge {
            return self.clone();
        }
        let scale =
            |d: u32| ((u64::from(d) * u64::from(max_edge) / u64::from(longest)) as u32).max(1);
        let (w, h) = (scale(self.width), scale(self.height));
        Frame::from_fn(w, h, |x, y| {
            let sx = (u64::from(x) * u64::from(self.width) / u64::from(w)) as u32;
            let sy = (u64::from(y) * u64::from(self.height) / u64::from(h)) as u32;
            self.pixel(sx, sy)
        })
    }

    pub fn decode_ppm(bytes: &[u8]) -> Result<Frame, PpmError> {
        let mut cursor = HeaderCursor { bytes, pos: 0 };
        let magic = cursor
            .token()
            .ok_or(PpmError::Header("missing magic number"))?;
        if magic != b"P6" {
            return Err(PpmError::UnsupportedFormat(
                String::from_utf8_lossy(magic).into_owned(),
            ));
        }
        let width = cursor.number().ok_or(PpmError::Header("bad width"))?;
        let height = cursor.number().ok_or(PpmError::Header("bad height"))?;
        let maxval = cursor.number().ok_or(PpmError::Header("bad maxval"))?;
        if width == 0 || height == 0 {
            return Err(PpmError::Header("zero dimension"));
        }
        if maxval != 255 {
            return Err(PpmError::MaxVal(maxval));
        }
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(cursor.pos) {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => return Err(PpmError::Header("missing separator before pixel data")),
        }
        let expected = width as usize * height as usize * 3;
        let raster = &bytes[cursor.pos..];
        if raster.len() < expected {
            return Err(PpmError::Truncated {
                expected,
                found: raster.len(),
            });
        }
        Ok(Frame {
            width,
            height,
            pixels: raster[..expected].to_vec(),
        })
    }

    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.pixels.len() + 20);
        self.write_ppm(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_blank(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_blank();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Option<u32> {
        let tok = self.token()?;
        std::str::from_utf8(tok).ok()?.parse().ok()
    }
}
