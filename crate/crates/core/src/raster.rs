//! Raster image types, PNM (PBM/PGM) I/O, projection profiles, rotation and
//! synthetic noise.
//!
//! Convention used throughout the crate: a binary pixel value of 1 is ink
//! (black), 0 is background (white paper). Gray samples run 0 (black) to
//! 255 (white).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// 8-bit grayscale image, row-major, 0 = black ink, 255 = white paper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
}

/// Bilevel image, row-major, 1 = ink, 0 = background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<u8>,
}

/// Half-open pixel rectangle: `x0 <= x < x1`, `y0 <= y < y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

/// Either image kind a PNM file can decode to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PnmImage {
    Gray(GrayImage),
    Binary(BinaryImage),
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be positive");
        assert_eq!(samples.len(), width * height, "sample count must be width * height");
        GrayImage { width, height, samples }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be positive");
        assert_eq!(bits.len(), width * height, "bit count must be width * height");
        debug_assert!(bits.iter().all(|&b| b <= 1));
        BinaryImage { width, height, bits }
    }

    pub fn blank(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0; width * height])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.bits[y * self.width + x] = v;
    }

    pub fn ink_count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_blank(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Tight bounding box of the ink, or `None` for a blank image.
    pub fn ink_bbox(&self) -> Option<BBox> {
        let (mut x0, mut y0) = (self.width, self.height);
        let (mut x1, mut y1) = (0usize, 0usize);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) == 1 {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x + 1);
                    y1 = y1.max(y + 1);
                }
            }
        }
        if x1 == 0 {
            None
        } else {
            Some(BBox { x0, y0, x1, y1 })
        }
    }

    /// Parse a fixture image from ASCII art: `#` is ink, `.` is background.
    /// Rows are lines; all rows must have equal length.
    pub fn from_ascii(art: &str) -> Self {
        let rows: Vec<&str> = art.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        assert!(!rows.is_empty(), "ascii art must have at least one row");
        let width = rows[0].len();
        let mut bits = Vec::with_capacity(width * rows.len());
        for row in &rows {
            assert_eq!(row.len(), width, "ragged ascii art row");
            for ch in row.chars() {
                bits.push(match ch {
                    '#' => 1,
                    '.' => 0,
                    other => panic!("unexpected ascii art char {other:?}"),
                });
            }
        }
        Self::new(width, rows.len(), bits)
    }
}

/// Per-row ink counts. Entry `r` is the number of ink pixels in row `r`.
pub fn h_projection(image: &BinaryImage) -> Vec<u32> {
    let mut proj = vec![0u32; image.height];
    for y in 0..image.height {
        let row = &image.bits[y * image.width..(y + 1) * image.width];
        proj[y] = row.iter().map(|&b| b as u32).sum();
    }
    proj
}

/// Per-column ink counts.
pub fn v_projection(image: &BinaryImage) -> Vec<u32> {
    let mut proj = vec![0u32; image.width];
    for y in 0..image.height {
        for x in 0..image.width {
            proj[x] += image.bits[y * image.width + x] as u32;
        }
    }
    proj
}

/// Copy the sub-rectangle `b` out of `image`.
pub fn crop(image: &BinaryImage, b: BBox) -> BinaryImage {
    assert!(b.x0 < b.x1 && b.x1 <= image.width, "bbox x out of range");
    assert!(b.y0 < b.y1 && b.y1 <= image.height, "bbox y out of range");
    let mut out = BinaryImage::blank(b.width(), b.height());
    for y in 0..b.height() {
        for x in 0..b.width() {
            out.set(x, y, image.get(b.x0 + x, b.y0 + y));
        }
    }
    out
}

/// Rotate by `theta` degrees about the image center using inverse
/// nearest-neighbor mapping. The output canvas grows to the rotated bounding
/// box so no source ink is clipped; new pixels are background.
pub fn rotate(image: &BinaryImage, theta: f64) -> BinaryImage {
    assert!(theta.abs() <= 45.0, "|theta| must be <= 45 degrees");
    let rad = theta.to_radians();
    let (sin, cos) = rad.sin_cos();
    let (w, h) = (image.width as f64, image.height as f64);
    // Grow symmetrically so the rotation center stays a lattice point of the
    // same parity and exact fixed points survive.
    let grow = |src: usize, need: f64| -> usize {
        let extra = (need - src as f64).max(0.0) / 2.0;
        src + 2 * extra.ceil() as usize
    };
    let out_w = grow(image.width, w * cos.abs() + h * sin.abs());
    let out_h = grow(image.height, w * sin.abs() + h * cos.abs());

    let cx_src = (w - 1.0) / 2.0;
    let cy_src = (h - 1.0) / 2.0;
    let cx_out = (out_w as f64 - 1.0) / 2.0;
    let cy_out = (out_h as f64 - 1.0) / 2.0;

    let mut out = BinaryImage::blank(out_w, out_h);
    for y in 0..out_h {
        for x in 0..out_w {
            let dx = x as f64 - cx_out;
            let dy = y as f64 - cy_out;
            // Inverse of the forward map (dx, dy) -> (dx cos - dy sin, dx sin + dy cos).
            let xs = cx_src + dx * cos + dy * sin;
            let ys = cy_src - dx * sin + dy * cos;
            let xi = xs.round();
            let yi = ys.round();
            if xi >= 0.0 && yi >= 0.0 && (xi as usize) < image.width && (yi as usize) < image.height
            {
                out.set(x, y, image.get(xi as usize, yi as usize));
            }
        }
    }
    out
}

/// Flip each bit independently with probability `p`, driven by `seed`.
/// The same (image, p, seed) triple always yields the same output.
pub fn add_salt_pepper(image: &BinaryImage, p: f64, seed: u64) -> BinaryImage {
    assert!((0.0..=1.0).contains(&p), "p must be in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = image.clone();
    for bit in out.bits.iter_mut() {
        if rng.gen::<f64>() < p {
            *bit ^= 1;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// PNM decode
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Pnm { offset: self.pos, msg: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    /// Skip whitespace and `#` comments (comments run to end of line).
    fn skip_space(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(c) = self.peek() {
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

    fn read_uint(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        let mut value: usize = 0;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() {
                value = value
                    .checked_mul(10)
                    .and_then(|v| v.checked_add((b - b'0') as usize))
                    .ok_or_else(|| self.err(format!("{what} overflows")))?;
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.err(format!("expected {what}")));
        }
        Ok(value)
    }
}

const MAX_PIXELS: usize = 1 << 28;

/// Decode PBM (P1/P4) bytes to a [`BinaryImage`] or PGM (P2/P5) bytes to a
/// [`GrayImage`]. PBM black (1) maps to ink (1).
pub fn load_pnm(bytes: &[u8]) -> Result<PnmImage> {
    let mut cur = Cursor { bytes, pos: 0 };
    if bytes.len() < 2 {
        return Err(cur.err("missing magic"));
    }
    let magic = &bytes[0..2];
    cur.pos = 2;
    let kind = match magic {
        b"P1" | b"P2" | b"P4" | b"P5" => magic[1],
        _ => return Err(Error::Pnm { offset: 0, msg: "unknown magic".into() }),
    };

    let dims_at = cur.pos;
    let width = cur.read_uint("width")?;
    let height = cur.read_uint("height")?;
    if width == 0 || height == 0 {
        return Err(Error::Pnm { offset: dims_at, msg: "dimensions must be positive".into() });
    }
    let n = width
        .checked_mul(height)
        .filter(|&n| n <= MAX_PIXELS)
        .ok_or(Error::Pnm { offset: dims_at, msg: "dimension overflow".into() })?;

    match kind {
        b'1' => {
            let mut bits = Vec::with_capacity(n);
            while bits.len() < n {
                cur.skip_space();
                match cur.peek() {
                    Some(b'0') => bits.push(0),
                    Some(b'1') => bits.push(1),
                    Some(_) => return Err(cur.err("expected 0 or 1")),
                    None => return Err(cur.err("truncated P1 payload")),
                }
                cur.pos += 1;
            }
            Ok(PnmImage::Binary(BinaryImage::new(width, height, bits)))
        }
        b'2' => {
            let maxval_at = cur.pos;
            let maxval = cur.read_uint("maxval")?;
            if maxval == 0 || maxval > 255 {
                return Err(Error::Pnm { offset: maxval_at, msg: "unsupported maxval".into() });
            }
            let mut samples = Vec::with_capacity(n);
            while samples.len() < n {
                let at = cur.pos;
                let v = cur.read_uint("sample")?;
                if v > maxval {
                    return Err(Error::Pnm { offset: at, msg: "sample exceeds maxval".into() });
                }
                samples.push(v as u8);
            }
            Ok(PnmImage::Gray(GrayImage::new(width, height, samples)))
        }
        b'4' => {
            // Single whitespace byte separates header from packed payload.
            match cur.peek() {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                _ => return Err(cur.err("expected whitespace before P4 payload")),
            }
            let row_bytes = (width + 7) / 8;
            let need = row_bytes * height;
            if bytes.len() - cur.pos < need {
                cur.pos = bytes.len();
                return Err(cur.err("truncated P4 payload"));
            }
            let mut bits = Vec::with_capacity(n);
            for y in 0..height {
                let row = &bytes[cur.pos + y * row_bytes..cur.pos + (y + 1) * row_bytes];
                for x in 0..width {
                    let byte = row[x / 8];
                    bits.push((byte >> (7 - x % 8)) & 1);
                }
            }
            Ok(PnmImage::Binary(BinaryImage::new(width, height, bits)))
        }
        b'5' => {
            let maxval_at = cur.pos;
            let maxval = cur.read_uint("maxval")?;
            if maxval == 0 || maxval > 255 {
                return Err(Error::Pnm { offset: maxval_at, msg: "unsupported maxval".into() });
            }
            match cur.peek() {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                _ => return Err(cur.err("expected whitespace before P5 payload")),
            }
            if bytes.len() - cur.pos < n {
                cur.pos = bytes.len();
                return Err(cur.err("truncated P5 payload"));
            }
            let samples = bytes[cur.pos..cur.pos + n].to_vec();
            Ok(PnmImage::Gray(GrayImage::new(width, height, samples)))
        }
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// PNM encode
// ---------------------------------------------------------------------------

/// Canonical PBM (P4) encoding. `load_pnm` inverts it exactly.
pub fn save_pbm(image: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", image.width, image.height).into_bytes();
    let row_bytes = (image.width + 7) / 8;
    for y in 0..image.height {
        let mut row = vec![0u8; row_bytes];
        for x in 0..image.width {
            if image.get(x, y) == 1 {
                row[x / 8] |= 1 << (7 - x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

/// Canonical PGM (P5) encoding with maxval 255.
pub fn save_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.samples);
    out
}

/// Canonical encoding for either image kind (P4 for binary, P5 for gray).
pub fn save_pnm(image: &PnmImage) -> Vec<u8> {
    match image {
        PnmImage::Binary(b) => save_pbm(b),
        PnmImage::Gray(g) => save_pgm(g),
    }
}
