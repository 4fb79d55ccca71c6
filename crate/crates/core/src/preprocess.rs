//! Page clean-up: background-removal binarization, 3x3 majority filtering and
//! pen-size normalization.

use crate::raster::{BinaryImage, GrayImage};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreprocessError {
    #[error("image contains no ink")]
    EmptyImage,
    #[error("invalid preprocessing configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Statistic used to summarize vertical ink runs into a pen size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenStatistic {
    Mean,
    Median,
    /// Median over ink pixels of the shortest run through the pixel along
    /// the two axes and the two diagonals (diagonal runs measured in
    /// Euclidean length); insensitive to how long strokes are.
    CrossRun,
}

impl PenStatistic {
    pub fn name(self) -> &'static str {
        match self {
            PenStatistic::Mean => "mean",
            PenStatistic::Median => "median",
            PenStatistic::CrossRun => "cross_run",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mean" => Some(PenStatistic::Mean),
            "median" => Some(PenStatistic::Median),
            "cross_run" => Some(PenStatistic::CrossRun),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    /// Half-width of the square structuring element used for background estimation.
    pub se_halfwidth: usize,
    /// Pen size the page is scaled to.
    pub target_pen: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub pen_statistic: PenStatistic,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            se_halfwidth: 15,
            target_pen: 4.0,
            scale_min: 0.25,
            scale_max: 4.0,
            pen_statistic: PenStatistic::CrossRun,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.se_halfwidth < 1 {
            return Err(PreprocessError::InvalidConfig("se_halfwidth must be >= 1"));
        }
        if !(self.target_pen > 0.0) {
            return Err(PreprocessError::InvalidConfig("target_pen must be > 0"));
        }
        if !(self.scale_min > 0.0 && self.scale_min < self.scale_max) {
            return Err(PreprocessError::InvalidConfig(
                "scale clamp must satisfy 0 < min < max",
            ));
        }
        Ok(())
    }
}

/// Flat square max (`dilate = true`) or min filter, separable, ignoring
/// out-of-image samples.
fn square_filter(img: &GrayImage, half: usize, dilate: bool) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let pick = |a: u8, b: u8| if dilate { a.max(b) } else { a.min(b) };
    let mut horiz = vec![0u8; w * h];
    for r in 0..h {
        let row = &img.samples()[r * w..(r + 1) * w];
        for c in 0..w {
            let lo = c.saturating_sub(half);
            let hi = (c + half).min(w - 1);
            horiz[r * w + c] = row[lo..=hi].iter().copied().reduce(pick).unwrap();
        }
    }
    let mut out = vec![0u8; w * h];
    for c in 0..w {
        for r in 0..h {
            let lo = r.saturating_sub(half);
            let hi = (r + half).min(h - 1);
            out[r * w + c] = (lo..=hi).map(|rr| horiz[rr * w + c]).reduce(pick).unwrap();
        }
    }
    GrayImage::new(w, h, out).expect("dimensions preserved")
}

/// Grayscale closing (dilation then erosion) with a flat square of side
/// `2 * half + 1`. On dark-ink pages this erases strokes narrower than the
/// element and leaves the illumination field.
pub fn estimate_background(img: &GrayImage, half: usize) -> GrayImage {
    square_filter(&square_filter(img, half, true), half, false)
}

/// Otsu threshold over a 256-bin histogram. Returns `None` when every sample
/// falls in a single bin.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 || hist.iter().filter(|&&n| n > 0).count() < 2 {
        return None;
    }
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &n)| i as f64 * n as f64).sum();
    let mut weight_lo = 0u64;
    let mut sum_lo = 0f64;
    let mut best = (f64::MIN, 0u8);
    for (t, &n) in hist.iter().enumerate().take(255) {
        weight_lo += n;
        sum_lo += t as f64 * n as f64;
        let weight_hi = total - weight_lo;
        if weight_lo == 0 || weight_hi == 0 {
            continue;
        }
        let mean_lo = sum_lo / weight_lo as f64;
        let mean_hi = (sum_all - sum_lo) / weight_hi as f64;
        let between = weight_lo as f64 * weight_hi as f64 * (mean_lo - mean_hi).powi(2);
        if between > best.0 {
            best = (between, t as u8);
        }
    }
    Some(best.1)
}

/// Marks ink where the page is darker than its estimated background by more
/// than the Otsu threshold of the residual.
pub fn binarize(img: &GrayImage, cfg: &PreprocessConfig) -> BinaryImage {
    let background = estimate_background(img, cfg.se_halfwidth);
    let residual: Vec<u8> = background
        .samples()
        .iter()
        .zip(img.samples())
        .map(|(&bg, &s)| bg.saturating_sub(s))
        .collect();
    let mut hist = [0u64; 256];
    for &r in &residual {
        hist[r as usize] += 1;
    }
    let (w, h) = (img.width(), img.height());
    match otsu_threshold(&hist) {
        None => BinaryImage::new(w, h),
        Some(t) => BinaryImage::from_mask(w, h, residual.iter().map(|&r| r > t).collect()),
    }
}

/// 3x3 binary median: a pixel is ink iff at least 5 of its 9-neighborhood
/// (itself included) are ink. Outside the image counts as background.
pub fn median_filter(img: &BinaryImage) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryImage::new(w, h);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let mut n = 0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    if img.get_signed(r + dr, c + dc) {
                        n += 1;
                    }
                }
            }
            if n >= 5 {
                out.set(r as usize, c as usize, true);
            }
        }
    }
    out
}

/// Lengths of all maximal vertical ink runs, column by column.
pub fn vertical_runs(img: &BinaryImage) -> Vec<usize> {
    let mut runs = Vec::new();
    for c in 0..img.width() {
        let mut run = 0;
        for r in 0..img.height() {
            if img.get(r, c) {
                run += 1;
            } else if run > 0 {
                runs.push(run);
                run = 0;
            }
        }
        if run > 0 {
            runs.push(run);
        }
    }
    runs
}

/// Mean length of the maximal vertical ink runs.
pub fn estimate_pen(img: &BinaryImage) -> Result<f64, PreprocessError> {
    estimate_pen_with(img, PenStatistic::Mean)
}

pub fn estimate_pen_with(img: &BinaryImage, stat: PenStatistic) -> Result<f64, PreprocessError> {
    let runs = vertical_runs(img);
    if runs.is_empty() {
        return Err(PreprocessError::EmptyImage);
    }
    match stat {
        PenStatistic::Mean => Ok(runs.iter().sum::<usize>() as f64 / runs.len() as f64),
        PenStatistic::Median => Ok(median_of(runs)),
        PenStatistic::CrossRun => cross_run_pen(img),
    }
}

fn median_of(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

fn cross_run_pen(img: &BinaryImage) -> Result<f64, PreprocessError> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut widths = vec![f64::INFINITY; (w * h) as usize];
    let steps = [(0, 1, 1.0), (1, 0, 1.0), (1, 1, std::f64::consts::SQRT_2), (1, -1, std::f64::consts::SQRT_2)];
    for (dr, dc, len) in steps {
        for r in 0..h {
            for c in 0..w {
                if !img.get_signed(r, c) || img.get_signed(r - dr, c - dc) {
                    continue;
                }
                let mut n = 0;
                while img.get_signed(r + n * dr, c + n * dc) {
                    n += 1;
                }
                for k in 0..n {
                    let i = ((r + k * dr) * w + c + k * dc) as usize;
                    widths[i] = widths[i].min(n as f64 * len);
                }
            }
        }
    }
    let mut widths: Vec<f64> = widths.into_iter().filter(|v| v.is_finite()).collect();
    if widths.is_empty() {
        return Err(PreprocessError::EmptyImage);
    }
    widths.sort_by(f64::total_cmp);
    let n = widths.len();
    Ok(if n % 2 == 1 {
        widths[n / 2]
    } else {
        (widths[n / 2 - 1] + widths[n / 2]) / 2.0
    })
}

/// Nearest-neighbor resampling by a uniform factor.
pub fn resample(img: &BinaryImage, scale: f64) -> BinaryImage {
    let nw = ((img.width() as f64 * scale).round() as usize).max(1);
    let nh = ((img.height() as f64 * scale).round() as usize).max(1);
    if nw == img.width() && nh == img.height() {
        return img.clone();
    }
    let src = |dst: usize, limit: usize| (((dst as f64 + 0.5) / scale) as usize).min(limit - 1);
    let cols: Vec<usize> = (0..nw).map(|c| src(c, img.width())).collect();
    let mut out = BinaryImage::new(nw, nh);
    for r in 0..nh {
        let sr = src(r, img.height());
        for (c, &sc) in cols.iter().enumerate() {
            if img.get(sr, sc) {
                out.set(r, c, true);
            }
        }
    }
    out
}

/// Scales the page so its pen size lands on `target_pen`.
pub fn normalize(
    img: &BinaryImage,
    cfg: &PreprocessConfig,
) -> Result<(BinaryImage, f64), PreprocessError> {
    let pen = estimate_pen_with(img, cfg.pen_statistic)?;
    let scale = (cfg.target_pen / pen).clamp(cfg.scale_min, cfg.scale_max);
    Ok((resample(img, scale), scale))
}
