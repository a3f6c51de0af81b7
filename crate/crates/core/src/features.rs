//! Feature extraction: the 18-feature sliding-window stream and the
//! four-direction projection (VH2D) stream.
//!
//! Both streams are computed over the same right-to-left window positions,
//! so for any word the two observation sequences have equal length. That
//! frame synchrony is what the multistream module builds on.

use crate::error::{Error, Result};
use crate::raster::{crop, v_projection, BinaryImage};

/// Identifies one of the two feature streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamId {
    Sw,
    Vh2d,
}

impl std::fmt::Display for StreamId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StreamId::Sw => "SW",
            StreamId::Vh2d => "VH2D",
        })
    }
}

/// One sliding-window position: an `N x H` slice of the word image.
#[derive(Debug, Clone)]
pub struct Frame {
    pub patch: BinaryImage,
    /// Column of the window's right edge in word coordinates.
    pub x_right: usize,
}

/// The 18 sliding-window features. `f[0]` is F1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwVector {
    pub f: [f64; 18],
}

/// The four projections of a square patch, as raw ink counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vh2dProjections {
    /// Per-column sums, length M.
    pub v: Vec<u32>,
    /// Per-row sums, length M.
    pub h: Vec<u32>,
    /// 45-degree diagonal sums, length 2M-1.
    pub d1: Vec<u32>,
    /// 135-degree diagonal sums, length 2M-1.
    pub d2: Vec<u32>,
}

/// An ordered feature-vector sequence for one stream of one word.
/// Index 0 is the rightmost frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSequence {
    pub stream_id: StreamId,
    pub vectors: Vec<Vec<f64>>,
}

/// Window and projection geometry shared by both streams.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureParams {
    /// Window width N in pixels. Must be a positive multiple of 8 so the
    /// eight column bands (F5..F12) tile the window exactly.
    pub window_width: usize,
    /// Window offset epsilon in pixels, `1 <= eps <= N-1`.
    pub window_step: usize,
    /// Vertical cell count C for the transition feature F3.
    pub cells: usize,
    /// Side M of the normalized square patch the projections run over.
    pub patch_size: usize,
    /// Bins B per projection; the VH2D vector has 4B components.
    pub bins: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams { window_width: 8, window_step: 4, cells: 8, patch_size: 16, bins: 8 }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_width == 0 || self.window_width % 8 != 0 {
            return Err(Error::invalid("window_width must be a positive multiple of 8"));
        }
        if self.window_step < 1 || self.window_step >= self.window_width {
            return Err(Error::invalid("window_step must satisfy 1 <= step <= width-1"));
        }
        if self.cells < 2 {
            return Err(Error::invalid("cells must be >= 2"));
        }
        if self.patch_size < 2 {
            return Err(Error::invalid("patch_size must be >= 2"));
        }
        if self.bins < 1 {
            return Err(Error::invalid("bins must be >= 1"));
        }
        Ok(())
    }

    /// Dimension of one VH2D vector.
    pub fn vh2d_dims(&self) -> usize {
        4 * self.bins
    }
}

/// Number of sliding-window features.
pub const SW_DIMS: usize = 18;

/// Cut the word into `N x H` frames, right edge first, moving left by `eps`
/// per frame. A word narrower than `N` is right-padded with background; a
/// final remainder narrower than `eps` is discarded.
pub fn slide_windows(word: &BinaryImage, n: usize, eps: usize) -> Vec<Frame> {
    assert!(n >= 1, "window width must be positive");
    assert!(eps >= 1 && eps < n, "offset must satisfy 1 <= eps <= N-1");

    let padded;
    let word = if word.width < n {
        let mut img = BinaryImage::blank(n, word.height);
        for y in 0..word.height {
            for x in 0..word.width {
                img.set(x, y, word.get(x, y));
            }
        }
        padded = img;
        &padded
    } else {
        word
    };

    let count = (word.width - n) / eps + 1;
    (0..count)
        .map(|i| {
            let x_right = word.width - i * eps;
            let patch = crop(
                word,
                crate::raster::BBox { x0: x_right - n, y0: 0, x1: x_right, y1: word.height },
            );
            Frame { patch, x_right }
        })
        .collect()
}

/// Normalized row of the ink centroid of a frame, or `None` when blank.
pub fn frame_centroid(frame: &Frame) -> Option<f64> {
    let patch = &frame.patch;
    let mut ink = 0usize;
    let mut ysum = 0usize;
    for y in 0..patch.height {
        for x in 0..patch.width {
            if patch.get(x, y) == 1 {
                ink += 1;
                ysum += y;
            }
        }
    }
    if ink == 0 {
        None
    } else {
        Some(ysum as f64 / ink as f64 / patch.height as f64)
    }
}

/// Compute the 18 sliding-window features of one frame.
///
/// `prev_cg` is the normalized centroid of the previous (right-hand)
/// frame, or `None` at the first frame and after a blank frame; F4 is 0 in
/// those cases and whenever this frame itself is blank.
pub fn sw_features(frame: &Frame, prev_cg: Option<f64>, cells: usize) -> SwVector {
    let patch = &frame.patch;
    let n = patch.width;
    let h = patch.height;
    assert!(n % 8 == 0, "frame width must be a multiple of 8");
    assert!(cells >= 2);
    let area = (n * h) as f64;

    let mut f = [0f64; 18];

    // F5..F12: ink density of the eight equal-width column bands. F1 is the
    // window density; computing it as the band mean keeps the
    // mean(F5..F12) == F1 identity exact in floating point.
    let band_w = n / 8;
    let band_area = (band_w * h) as f64;
    for b in 0..8 {
        let mut count = 0usize;
        for x in b * band_w..(b + 1) * band_w {
            for y in 0..h {
                count += patch.get(x, y) as usize;
            }
        }
        f[4 + b] = count as f64 / band_area;
    }
    f[0] = f[4..12].iter().sum::<f64>() / 8.0;
    f[1] = 1.0 - f[0];

    // F3: label changes across the C vertical cells (a cell is "ink" when it
    // holds at least one ink pixel), normalized by C-1.
    let mut transitions = 0usize;
    let mut prev_label = None;
    for c in 0..cells {
        let y0 = c * h / cells;
        let y1 = (c + 1) * h / cells;
        let mut label = false;
        'cell: for y in y0..y1 {
            for x in 0..n {
                if patch.get(x, y) == 1 {
                    label = true;
                    break 'cell;
                }
            }
        }
        if let Some(p) = prev_label {
            if p != label {
                transitions += 1;
            }
        }
        prev_label = Some(label);
    }
    f[2] = transitions as f64 / (cells - 1) as f64;

    // F13 and F4: vertical centroid and its delta to the previous frame.
    let cg = frame_centroid(frame);
    f[12] = cg.unwrap_or(0.0);
    f[3] = match (cg, prev_cg) {
        (Some(c), Some(p)) => c - p,
        _ => 0.0,
    };

    // F14..F18: background pixels classified by where their ink neighbors
    // sit (above, below, right, left, or three-plus sides = a concavity).
    let mut counts = [0usize; 5];
    for y in 0..h {
        for x in 0..n {
            if patch.get(x, y) == 1 {
                continue;
            }
            let up = y > 0 && patch.get(x, y - 1) == 1;
            let down = y + 1 < h && patch.get(x, y + 1) == 1;
            let right = x + 1 < n && patch.get(x + 1, y) == 1;
            let left = x > 0 && patch.get(x - 1, y) == 1;
            if up {
                counts[0] += 1;
            }
            if down {
                counts[1] += 1;
            }
            if right {
                counts[2] += 1;
            }
            if left {
                counts[3] += 1;
            }
            if [up, down, right, left].iter().filter(|&&b| b).count() >= 3 {
                counts[4] += 1;
            }
        }
    }
    for k in 0..5 {
        f[13 + k] = counts[k] as f64 / area;
    }

    SwVector { f }
}

/// Rescale the frame's tight ink bounding box to an `M x M` patch with
/// nearest-neighbor sampling. A blank frame yields a blank patch.
pub fn normalize_patch(frame: &Frame, m: usize) -> BinaryImage {
    assert!(m >= 2, "patch size must be >= 2");
    let Some(bbox) = frame.patch.ink_bbox() else {
        return BinaryImage::blank(m, m);
    };
    let bw = bbox.width();
    let bh = bbox.height();
    let mut out = BinaryImage::blank(m, m);
    for y in 0..m {
        for x in 0..m {
            let xs = bbox.x0 + x * bw / m;
            let ys = bbox.y0 + y * bh / m;
            out.set(x, y, frame.patch.get(xs, ys));
        }
    }
    out
}

/// Project a square patch onto the vertical, horizontal and both diagonal
/// directions. With 1-based row `l` and column `k`, diagonal family d1
/// groups pixels by `l - k = M - m` and d2 by `l + k = m + 1`,
/// `m = 1..2M-1`; each family partitions the patch, so all four projections
/// sum to the ink count.
pub fn vh2d(patch: &BinaryImage) -> Result<Vh2dProjections> {
    if patch.width != patch.height {
        return Err(Error::invalid("vh2d requires a square patch"));
    }
    let m = patch.width;
    let v = v_projection(patch);
    let h = crate::raster::h_projection(patch);
    let mut d1 = vec![0u32; 2 * m - 1];
    let mut d2 = vec![0u32; 2 * m - 1];
    for row in 0..m {
        for col in 0..m {
            if patch.get(col, row) == 1 {
                d1[col + m - 1 - row] += 1;
                d2[col + row] += 1;
            }
        }
    }
    Ok(Vh2dProjections { v, h, d1, d2 })
}

/// Reduce a projection to `bins` contiguous groups, each reported as its sum
/// divided by the patch area, so values stay in [0, 1].
pub fn bin_projection(proj: &[u32], bins: usize, patch_area: usize) -> Vec<f64> {
    assert!(bins >= 1 && !proj.is_empty());
    let len = proj.len();
    (0..bins)
        .map(|g| {
            let start = g * len / bins;
            let end = (g + 1) * len / bins;
            let sum: u32 = proj[start..end].iter().sum();
            sum as f64 / patch_area as f64
        })
        .collect()
}

/// The binned 4B-dimensional VH2D vector of one frame.
pub fn vh2d_vector(frame: &Frame, params: &FeatureParams) -> Vec<f64> {
    let m = params.patch_size;
    let patch = normalize_patch(frame, m);
    let proj = vh2d(&patch).expect("normalized patch is square");
    let area = m * m;
    let mut out = Vec::with_capacity(params.vh2d_dims());
    out.extend(bin_projection(&proj.v, params.bins, area));
    out.extend(bin_projection(&proj.h, params.bins, area));
    out.extend(bin_projection(&proj.d1, params.bins, area));
    out.extend(bin_projection(&proj.d2, params.bins, area));
    out
}

/// Extract both feature streams of a word image. The streams share window
/// positions and therefore always have equal length.
pub fn extract_streams(
    word: &BinaryImage,
    params: &FeatureParams,
) -> Result<(StreamSequence, StreamSequence)> {
    params.validate()?;
    if word.is_blank() {
        return Err(Error::invalid("blank word"));
    }
    let frames = slide_windows(word, params.window_width, params.window_step);

    let mut sw = Vec::with_capacity(frames.len());
    let mut prev_cg = None;
    for frame in &frames {
        let vec = sw_features(frame, prev_cg, params.cells);
        sw.push(vec.f.to_vec());
        prev_cg = frame_centroid(frame);
    }

    let vh: Vec<Vec<f64>> = frames.iter().map(|fr| vh2d_vector(fr, params)).collect();

    Ok((
        StreamSequence { stream_id: StreamId::Sw, vectors: sw },
        StreamSequence { stream_id: StreamId::Vh2d, vectors: vh },
    ))
}
