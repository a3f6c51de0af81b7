//! Projection-profile segmentation: page into text lines, line into words.
//!
//! Words are emitted right-to-left, matching the reading order of the
//! scripts this pipeline targets.

use crate::error::{Error, Result};
use crate::raster::{h_projection, v_projection, BBox, BinaryImage};

/// A horizontal band of page rows holding one text line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineBand {
    /// First row of the band (inclusive).
    pub top: usize,
    /// One past the last row (exclusive).
    pub bottom: usize,
}

/// A word inside a line, with its position in reading order
/// (`order_index` 0 is the rightmost word).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordBox {
    pub bbox: BBox,
    pub order_index: usize,
}

/// Split a page into line bands. Rows whose horizontal projection exceeds
/// `alpha * max(projection)` form runs; runs shorter than 2 rows are
/// dropped, survivors grow by one row on each side (clamped) and overlapping
/// bands merge. A blank page yields no bands.
pub fn segment_lines(page: &BinaryImage, alpha: f64) -> Result<Vec<LineBand>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must be in (0, 1)"));
    }
    let proj = h_projection(page);
    let max = *proj.iter().max().unwrap() as f64;
    if max == 0.0 {
        return Ok(Vec::new());
    }
    let tau = alpha * max;

    let mut bands = Vec::new();
    let mut run_start: Option<usize> = None;
    for r in 0..=proj.len() {
        let on = r < proj.len() && proj[r] as f64 > tau;
        match (run_start, on) {
            (None, true) => run_start = Some(r),
            (Some(s), false) => {
                if r - s >= 2 {
                    bands.push(LineBand {
                        top: s.saturating_sub(1),
                        bottom: (r + 1).min(page.height),
                    });
                }
                run_start = None;
            }
            _ => {}
        }
    }

    // Growing by one row can make neighbors touch; keep bands disjoint.
    let mut merged: Vec<LineBand> = Vec::new();
    for band in bands {
        match merged.last_mut() {
            Some(prev) if band.top < prev.bottom => prev.bottom = band.bottom.max(prev.bottom),
            _ => merged.push(band),
        }
    }
    Ok(merged)
}

/// Split a line into words. Runs of `gap` or more blank columns separate
/// words; shorter blank runs are treated as intra-word gaps. Boxes are tight
/// around their ink and ordered right-to-left.
pub fn segment_words(line: &BinaryImage, gap: usize) -> Result<Vec<WordBox>> {
    if gap < 1 {
        return Err(Error::invalid("gap must be >= 1"));
    }
    let proj = v_projection(line);

    // Column spans of ink separated by wide-enough blank runs.
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut x = 0;
    while x < proj.len() {
        if proj[x] == 0 {
            x += 1;
            continue;
        }
        let start = x;
        let mut end = x + 1;
        let mut blanks = 0;
        let mut last_ink = x;
        while end < proj.len() {
            if proj[end] == 0 {
                blanks += 1;
                if blanks >= gap {
                    break;
                }
            } else {
                blanks = 0;
                last_ink = end;
            }
            end += 1;
        }
        spans.push((start, last_ink + 1));
        x = end;
    }

    // Tight box per span, rightmost first.
    let mut boxes: Vec<WordBox> = Vec::new();
    for &(x0, x1) in spans.iter().rev() {
        let mut y0 = line.height;
        let mut y1 = 0usize;
        for y in 0..line.height {
            for x in x0..x1 {
                if line.get(x, y) == 1 {
                    y0 = y0.min(y);
                    y1 = y1.max(y + 1);
                }
            }
        }
        boxes.push(WordBox {
            bbox: BBox { x0, y0, x1, y1 },
            order_index: boxes.len(),
        });
    }
    Ok(boxes)
}
