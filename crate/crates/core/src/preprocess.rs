//! Page cleanup: binarization, noise filtering, skew estimation/correction
//! and baseline detection.

use crate::error::{Error, Result};
use crate::raster::{h_projection, rotate, BinaryImage, GrayImage};

/// Result of Hough-based skew detection. Positive angles mean the text lines
/// lean the way [`rotate`] turns them for positive theta, so
/// `deskew` = rotate by `-angle`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewEstimate {
    pub angle: f64,
    pub peak_score: u32,
}

/// Global Otsu threshold: pick `t` maximizing between-class variance of the
/// 256-bin histogram (smallest maximizer on ties), then mark `intensity < t`
/// as ink. Constant images come out all background.
pub fn binarize_otsu(image: &GrayImage) -> BinaryImage {
    let threshold = otsu_threshold(image);
    let bits = image.samples.iter().map(|&v| u8::from((v as u32) < threshold)).collect();
    BinaryImage::new(image.width, image.height, bits)
}

/// The threshold `binarize_otsu` applies, exposed for testing.
pub fn otsu_threshold(image: &GrayImage) -> u32 {
    let mut hist = [0u64; 256];
    for &v in &image.samples {
        hist[v as usize] += 1;
    }
    let total = image.samples.len() as f64;
    let total_sum: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();

    let mut best_t = 0u32;
    let mut best_var = f64::NEG_INFINITY;
    let mut count_below = 0f64;
    let mut sum_below = 0f64;
    for t in 0..=255u32 {
        // Class 0 is intensity < t.
        if t > 0 {
            count_below += hist[(t - 1) as usize] as f64;
            sum_below += (t - 1) as f64 * hist[(t - 1) as usize] as f64;
        }
        let w0 = count_below / total;
        let w1 = 1.0 - w0;
        let var = if count_below == 0.0 || count_below == total {
            0.0
        } else {
            let mu0 = sum_below / count_below;
            let mu1 = (total_sum - sum_below) / (total - count_below);
            w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
        };
        if var > best_var {
            best_var = var;
            best_t = t;
        }
    }
    best_t
}

/// 3x3 binary median (majority of the nine neighbors) with edge replication.
pub fn median3x3(image: &BinaryImage) -> BinaryImage {
    let mut out = BinaryImage::blank(image.width, image.height);
    let w = image.width as isize;
    let h = image.height as isize;
    for y in 0..h {
        for x in 0..w {
            let mut ink = 0u32;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let xs = (x + dx).clamp(0, w - 1) as usize;
                    let ys = (y + dy).clamp(0, h - 1) as usize;
                    ink += image.get(xs, ys) as u32;
                }
            }
            out.set(x as usize, y as usize, u8::from(ink >= 5));
        }
    }
    out
}

/// Estimate page skew with a line Hough transform over
/// `theta in [90 - range, 90 + range]` degrees (step `step`, rho bins of one
/// pixel). The score of each theta is its maximum accumulator cell; ties go
/// to the angle of smaller magnitude, then to the negative one.
pub fn estimate_skew_hough(image: &BinaryImage, range: f64, step: f64) -> Result<SkewEstimate> {
    if range <= 0.0 || range > 45.0 {
        return Err(Error::invalid("skew range must be in (0, 45] degrees"));
    }
    if step <= 0.0 {
        return Err(Error::invalid("skew step must be positive"));
    }
    if image.is_blank() {
        return Err(Error::invalid("no ink"));
    }

    let n_theta = (2.0 * range / step).round() as usize + 1;
    let diag = ((image.width * image.width + image.height * image.height) as f64).sqrt().ceil()
        as isize;
    let n_rho = (2 * diag + 1) as usize;

    let thetas: Vec<f64> = (0..n_theta).map(|k| 90.0 - range + k as f64 * step).collect();
    let trig: Vec<(f64, f64)> = thetas.iter().map(|t| t.to_radians().sin_cos()).collect();

    let mut acc = vec![0u32; n_theta * n_rho];
    for y in 0..image.height {
        for x in 0..image.width {
            if image.get(x, y) == 0 {
                continue;
            }
            for (k, &(sin, cos)) in trig.iter().enumerate() {
                let rho = x as f64 * cos + y as f64 * sin;
                let bin = (rho.round() as isize + diag) as usize;
                acc[k * n_rho + bin] += 1;
            }
        }
    }

    let mut best_angle = 0.0f64;
    let mut best_score = 0u32;
    let mut have = false;
    for k in 0..n_theta {
        let score = *acc[k * n_rho..(k + 1) * n_rho].iter().max().unwrap();
        let angle = thetas[k] - 90.0;
        let better = !have
            || score > best_score
            || (score == best_score
                && (angle.abs() < best_angle.abs()
                    || (angle.abs() == best_angle.abs() && angle < best_angle)));
        if better {
            best_score = score;
            best_angle = angle;
            have = true;
        }
    }
    Ok(SkewEstimate { angle: best_angle, peak_score: best_score })
}

/// Rotate the page by the opposite of the estimated skew.
pub fn deskew(image: &BinaryImage, est: &SkewEstimate) -> BinaryImage {
    rotate(image, -est.angle)
}

/// Baseline of a text line: the row with maximal horizontal projection
/// (smallest row index on ties).
pub fn baseline_row(line: &BinaryImage) -> Result<usize> {
    if line.is_blank() {
        return Err(Error::invalid("no ink"));
    }
    let proj = h_projection(line);
    let mut best = 0usize;
    for (r, &v) in proj.iter().enumerate() {
        if v > proj[best] {
            best = r;
        }
    }
    Ok(best)
}
