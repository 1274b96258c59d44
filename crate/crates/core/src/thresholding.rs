//! Binary thresholding methods and the white-pixel percentage measurement.
//!
//! Every method uses the same polarity: a pixel is white iff its intensity is
//! strictly greater than its threshold. Bright closed eyelids therefore come
//! out white while the dark iris of an open eye comes out black.

use std::fmt;

use crate::error::{invalid, Result};
use crate::imgcore::{gaussian_kernel, BinaryImage, GrayImage, IntegralImage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdMethod {
    SimpleBinary {
        threshold: u8,
    },
    Otsu,
    /// `mean + k * stddev` over a square window.
    Niblack {
        window: usize,
        k: f64,
    },
    /// Midrange of the local min and max when the local contrast is at least
    /// `contrast_min`, otherwise a fixed comparison against `fallback_level`.
    Bernsen {
        window: usize,
        contrast_min: u8,
        fallback_level: u8,
    },
    /// Unweighted local mean minus `c`.
    AdaptiveMean {
        block: usize,
        c: f64,
    },
    /// Gaussian-weighted local mean minus `c` (AGBT).
    AdaptiveGaussian {
        block: usize,
        sigma: f64,
        c: f64,
    },
}

impl ThresholdMethod {
    pub const DEFAULT_SIMPLE_LEVEL: u8 = 127;

    pub fn simple() -> Self {
        Self::SimpleBinary {
            threshold: Self::DEFAULT_SIMPLE_LEVEL,
        }
    }

    pub fn niblack() -> Self {
        Self::Niblack { window: 15, k: -0.2 }
    }

    pub fn bernsen() -> Self {
        Self::Bernsen {
            window: 15,
            contrast_min: 15,
            fallback_level: 128,
        }
    }

    pub fn adaptive_mean() -> Self {
        Self::AdaptiveMean { block: 11, c: 2.0 }
    }

    /// Adaptive Gaussian thresholding with block 11, sigma = block / 6, C = 2.
    pub fn agbt() -> Self {
        Self::agbt_with(11, 2.0)
    }

    pub fn agbt_with(block: usize, c: f64) -> Self {
        Self::AdaptiveGaussian {
            block,
            sigma: block as f64 / 6.0,
            c,
        }
    }

    /// The six methods with default parameters, in the order they are
    /// usually tabulated.
    pub fn all_defaults() -> Vec<Self> {
        vec![
            Self::simple(),
            Self::Otsu,
            Self::niblack(),
            Self::bernsen(),
            Self::adaptive_mean(),
            Self::agbt(),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SimpleBinary { .. } => "simple-binary",
            Self::Otsu => "otsu",
            Self::Niblack { .. } => "niblack",
            Self::Bernsen { .. } => "bernsen",
            Self::AdaptiveMean { .. } => "adaptive-mean",
            Self::AdaptiveGaussian { .. } => "adaptive-gaussian",
        }
    }

    pub fn is_local(&self) -> bool {
        !matches!(self, Self::SimpleBinary { .. } | Self::Otsu)
    }

    pub fn validate(&self) -> Result<()> {
        let check_window = |w: usize, what: &str| {
            if w < 3 || w.is_multiple_of(2) {
                Err(invalid(format!("{what} must be odd and at least 3, got {w}")))
            } else {
                Ok(())
            }
        };
        match *self {
            Self::SimpleBinary { .. } | Self::Otsu => Ok(()),
            Self::Niblack { window, k } => {
                check_window(window, "Niblack window")?;
                finite(k, "Niblack k")
            }
            Self::Bernsen { window, .. } => check_window(window, "Bernsen window"),
            Self::AdaptiveMean { block, c } => {
                check_window(block, "adaptive block")?;
                finite(c, "adaptive C")
            }
            Self::AdaptiveGaussian { block, sigma, c } => {
                check_window(block, "adaptive block")?;
                finite(c, "adaptive C")?;
                if !sigma.is_finite() || sigma <= 0.0 {
                    return Err(invalid(format!("Gaussian sigma must be positive, got {sigma}")));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ThresholdMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::SimpleBinary { threshold } => write!(f, "simple-binary(T={threshold})"),
            Self::Otsu => write!(f, "otsu"),
            Self::Niblack { window, k } => write!(f, "niblack(window={window}, k={k})"),
            Self::Bernsen {
                window,
                contrast_min,
                fallback_level,
            } => write!(
                f,
                "bernsen(window={window}, contrast_min={contrast_min}, fallback={fallback_level})"
            ),
            Self::AdaptiveMean { block, c } => write!(f, "adaptive-mean(block={block}, C={c})"),
            Self::AdaptiveGaussian { block, sigma, c } => {
                write!(f, "adaptive-gaussian(block={block}, sigma={sigma:.4}, C={c})")
            }
        }
    }
}

fn finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be finite")))
    }
}

/// Percentage of white pixels, in `[0, 100]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct WhitePercentage(f64);

impl WhitePercentage {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=100.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(invalid(format!("white percentage {value} outside [0, 100]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for WhitePercentage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}%", self.0)
    }
}

pub fn white_percentage(b: &BinaryImage) -> WhitePercentage {
    if b.is_empty() {
        return WhitePercentage(0.0);
    }
    WhitePercentage(100.0 * b.white_count() as f64 / b.len() as f64)
}

/// Otsu level: the smallest `t` maximizing the between-class variance of the
/// split `{v <= t}` / `{v > t}`.
pub fn otsu_level(img: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for &v in img.as_raw() {
        hist[v as usize] += 1;
    }
    otsu_from_histogram(&hist)
}

// Between-class variance is proportional to (N*S0 - n0*S)^2 / (n0*n1); the
// candidates are compared as exact fractions when the products fit in u128.
fn otsu_from_histogram(hist: &[u64; 256]) -> u8 {
    let total: u64 = hist.iter().sum();
    let sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let mut best_t = 0u8;
    let mut best: Option<(u128, u128)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for (t, &count) in hist.iter().enumerate() {
        n0 += count;
        s0 += t as u64 * count;
        let n1 = total - n0;
        let (num, den) = if n0 == 0 || n1 == 0 {
            (0u128, 1u128)
        } else {
            let diff = (total as i128 * s0 as i128 - n0 as i128 * sum as i128).unsigned_abs();
            (diff * diff, n0 as u128 * n1 as u128)
        };
        let better = match best {
            None => true,
            Some((bn, bd)) => match (num.checked_mul(bd), bn.checked_mul(den)) {
                (Some(l), Some(r)) => l > r,
                _ => (num as f64 / den as f64) > (bn as f64 / bd as f64),
            },
        };
        if better {
            best = Some((num, den));
            best_t = t as u8;
        }
    }
    best_t
}

pub fn apply_threshold(img: &GrayImage, method: &ThresholdMethod) -> Result<BinaryImage> {
    method.validate()?;
    if method.is_local() && (img.width() < 3 || img.height() < 3) {
        return Err(invalid(format!(
            "{} needs at least 3x3 pixels, got {}x{}",
            method.name(),
            img.width(),
            img.height()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let px = img.as_raw();
    let data: Vec<bool> = match *method {
        ThresholdMethod::SimpleBinary { threshold } => px.iter().map(|&v| v > threshold).collect(),
        ThresholdMethod::Otsu => {
            let t = otsu_level(img);
            px.iter().map(|&v| v > t).collect()
        }
        ThresholdMethod::Niblack { window, k } => {
            let ii = IntegralImage::new(img);
            let r = window / 2;
            (0..w * h)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    let (rect, n) = ii.clipped_window(x, y, r);
                    let n = n as f64;
                    let mean = ii.rect_sum(rect) as f64 / n;
                    let var = (ii.rect_squared_sum(rect) as f64 / n - mean * mean).max(0.0);
                    px[i] as f64 > mean + k * var.sqrt()
                })
                .collect()
        }
        ThresholdMethod::Bernsen {
            window,
            contrast_min,
            fallback_level,
        } => {
            let (lo, hi) = local_min_max(img, window / 2);
            (0..w * h)
                .map(|i| {
                    if hi[i] - lo[i] >= contrast_min {
                        px[i] as u16 * 2 > lo[i] as u16 + hi[i] as u16
                    } else {
                        px[i] > fallback_level
                    }
                })
                .collect()
        }
        ThresholdMethod::AdaptiveMean { block, c } => {
            let ii = IntegralImage::new(img);
            let r = block / 2;
            (0..w * h)
                .map(|i| {
                    let (rect, n) = ii.clipped_window(i % w, i / w, r);
                    px[i] as f64 > ii.rect_sum(rect) as f64 / n as f64 - c
                })
                .collect()
        }
        ThresholdMethod::AdaptiveGaussian { block, sigma, c } => {
            let mean = gaussian_local_mean(img, block, sigma);
            px.iter().zip(&mean).map(|(&v, &m)| v as f64 > m - c).collect()
        }
    };
    BinaryImage::new(w, h, data)
}

/// Gaussian-weighted neighborhood mean with a `block`-tap kernel and edge
/// replication.
pub fn gaussian_local_mean(img: &GrayImage, block: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma, block / 2);
    let src: Vec<f64> = img.as_raw().iter().map(|&v| v as f64).collect();
    crate::imgcore::convolve_separable(&src, img.width(), img.height(), &kernel)
}

// Separable running min/max over a square window clipped to the image.
fn local_min_max(img: &GrayImage, radius: usize) -> (Vec<u8>, Vec<u8>) {
    let (w, h) = (img.width(), img.height());
    let px = img.as_raw();
    let mut row_lo = vec![0u8; w * h];
    let mut row_hi = vec![0u8; w * h];
    for y in 0..h {
        let row = &px[y * w..(y + 1) * w];
        for x in 0..w {
            let span = &row[x.saturating_sub(radius)..(x + radius + 1).min(w)];
            row_lo[y * w + x] = *span.iter().min().unwrap();
            row_hi[y * w + x] = *span.iter().max().unwrap();
        }
    }
    let mut lo = vec![0u8; w * h];
    let mut hi = vec![0u8; w * h];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(radius), (y + radius + 1).min(h));
        for x in 0..w {
            lo[y * w + x] = (y0..y1).map(|yy| row_lo[yy * w + x]).min().unwrap();
            hi[y * w + x] = (y0..y1).map(|yy| row_hi[yy * w + x]).max().unwrap();
        }
    }
    (lo, hi)
}

/// Mean white percentage over `closed` minus mean over `open`.
pub fn method_gap(open: &[GrayImage], closed: &[GrayImage], method: &ThresholdMethod) -> Result<f64> {
    if open.is_empty() || closed.is_empty() {
        return Err(invalid("method_gap needs non-empty open and closed sets"));
    }
    Ok(mean_white(closed, method)? - mean_white(open, method)?)
}

pub fn mean_white(set: &[GrayImage], method: &ThresholdMethod) -> Result<f64> {
    if set.is_empty() {
        return Err(invalid("cannot average an empty image set"));
    }
    let mut total = 0.0;
    for img in set {
        total += white_percentage(&apply_threshold(img, method)?).value();
    }
    Ok(total / set.len() as f64)
}
