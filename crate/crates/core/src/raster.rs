//! Image containers, PGM reading/writing and projection profiles.
//!
//! Coordinates are `(row, col)` with the origin at the top-left corner and
//! storage is row-major.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RasterError {
    #[error("bad magic number: expected P2 or P5")]
    BadMagic,
    #[error("truncated data: expected {expected} samples, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("maxval {0} unsupported (must be 1..=255)")]
    MaxvalUnsupported(u32),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("image dimensions must be at least 1x1")]
    EmptyDimensions,
    #[error("sample count {found} does not match {width}x{height}")]
    SizeMismatch {
        width: usize,
        height: usize,
        found: usize,
    },
}

/// 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyDimensions);
        }
        if samples.len() != width * height {
            return Err(RasterError::SizeMismatch {
                width,
                height,
                found: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image must be at least 1x1");
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.samples[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.samples[row * self.width + col] = value;
    }
}

/// Two-level raster; `true` marks ink.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    mask: Vec<bool>,
    ink: usize,
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BinaryImage {}x{} ({} ink)", self.width, self.height, self.ink)?;
        if self.width * self.height <= 4096 {
            for r in 0..self.height {
                let line: String = (0..self.width)
                    .map(|c| if self.get(r, c) { '#' } else { '.' })
                    .collect();
                writeln!(f, "{line}")?;
            }
        }
        Ok(())
    }
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
            ink: 0,
        }
    }

    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), width * height, "mask length must be width*height");
        let ink = mask.iter().filter(|&&b| b).count();
        Self {
            width,
            height,
            mask,
            ink,
        }
    }

    /// Builds an image from text rows, `#` (or any of `X*1`) meaning ink.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        let mut img = Self::new(width, height);
        for (r, line) in rows.iter().enumerate() {
            for (c, ch) in line.chars().enumerate() {
                if matches!(ch, '#' | 'X' | '*' | '1') {
                    img.set(r, c, true);
                }
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn ink_count(&self) -> usize {
        self.ink
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    /// Out-of-bounds reads are background.
    pub fn get_signed(&self, row: isize, col: isize) -> bool {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            false
        } else {
            self.mask[row as usize * self.width + col as usize]
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let idx = row * self.width + col;
        if self.mask[idx] != value {
            if value {
                self.ink += 1;
            } else {
                self.ink -= 1;
            }
            self.mask[idx] = value;
        }
    }

    /// Ink pixel coordinates in row-major order.
    pub fn ink_pixels(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.ink);
        for r in 0..self.height {
            for c in 0..self.width {
                if self.get(r, c) {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Copy of the rectangle `[top, bottom] x [left, right]` (inclusive).
    pub fn crop(&self, top: usize, left: usize, bottom: usize, right: usize) -> BinaryImage {
        let w = right - left + 1;
        let h = bottom - top + 1;
        let mut out = BinaryImage::new(w, h);
        for r in 0..h {
            for c in 0..w {
                if self.get(top + r, left + c) {
                    out.set(r, c, true);
                }
            }
        }
        out
    }

    /// Renders ink as black (0) on white (255).
    pub fn to_gray(&self) -> GrayImage {
        let samples = self.mask.iter().map(|&b| if b { 0 } else { 255 }).collect();
        GrayImage {
            width: self.width.max(1),
            height: self.height.max(1),
            samples: if self.width * self.height == 0 {
                vec![255]
            } else {
                samples
            },
        }
    }
}

/// Per-row or per-column ink counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub counts: Vec<usize>,
}

impl Projection {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn horizontal_projection(img: &BinaryImage) -> Projection {
    let counts = img
        .mask
        .chunks(img.width.max(1))
        .take(img.height)
        .map(|row| row.iter().filter(|&&b| b).count())
        .collect();
    Projection { counts }
}

pub fn vertical_projection(img: &BinaryImage) -> Projection {
    let mut counts = vec![0; img.width];
    for r in 0..img.height {
        for (c, count) in counts.iter_mut().enumerate() {
            if img.get(r, c) {
                *count += 1;
            }
        }
    }
    Projection { counts }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, RasterError> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(RasterError::BadHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| RasterError::BadHeader(format!("{what} out of range")))
    }
}

/// Parses a P5 (binary) or P2 (ASCII) graymap with maxval at most 255.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'2' | b'5') {
        return Err(RasterError::BadMagic);
    }
    let binary = bytes[1] == b'5';
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(RasterError::MaxvalUnsupported(maxval));
    }
    if width == 0 || height == 0 {
        return Err(RasterError::EmptyDimensions);
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| RasterError::BadHeader("dimensions overflow".into()))?;

    let samples = if binary {
        // exactly one whitespace byte separates the header from the raster
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(RasterError::TruncatedData { expected, found: 0 });
        }
        let data = &bytes[cur.pos + 1..];
        if data.len() < expected {
            return Err(RasterError::TruncatedData {
                expected,
                found: data.len(),
            });
        }
        data[..expected].to_vec()
    } else {
        let mut samples = Vec::with_capacity(expected);
        while samples.len() < expected {
            cur.skip_ws_and_comments();
            if cur.pos >= bytes.len() {
                return Err(RasterError::TruncatedData {
                    expected,
                    found: samples.len(),
                });
            }
            let v = cur.number("sample")?;
            if v > maxval {
                return Err(RasterError::BadHeader(format!(
                    "sample {v} exceeds maxval {maxval}"
                )));
            }
            samples.push(v as u8);
        }
        samples
    };

    GrayImage::new(width, height, samples)
}

pub fn save_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.samples);
    out
}
