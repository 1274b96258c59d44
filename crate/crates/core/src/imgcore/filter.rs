use super::{FloatImage, GrayImage};
use crate::error::{invalid, Result};

/// Normalized 1-D Gaussian kernel with the given radius. Index `radius` is
/// the center tap.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable convolution with edge replication, applied to a row-major
/// float buffer.
pub(crate) fn convolve_separable(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = (width as isize, height as isize);
    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                let sx = (x + t as isize - radius).clamp(0, w - 1) as usize;
                acc += k * row[sx];
            }
            tmp[y * width + x as usize] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for (t, &k) in kernel.iter().enumerate() {
            let sy = (y + t as isize - radius).clamp(0, h - 1) as usize;
            let src_row = &tmp[sy * width..(sy + 1) * width];
            let dst_row = &mut out[y as usize * width..(y as usize + 1) * width];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += k * s;
            }
        }
    }
    out
}

fn kernel_for(sigma: f64) -> Result<Vec<f64>> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(invalid(format!("smoothing sigma must be positive, got {sigma}")));
    }
    Ok(gaussian_kernel(sigma, (3.0 * sigma).ceil() as usize))
}

/// Gaussian smoothing, kernel radius `ceil(3 sigma)`, edge replication.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    Ok(gaussian_smooth_float(img, sigma)?.to_gray())
}

/// Same as [`gaussian_smooth`] without the final rounding.
pub fn gaussian_smooth_float(img: &GrayImage, sigma: f64) -> Result<FloatImage> {
    let kernel = kernel_for(sigma)?;
    let src: Vec<f64> = img.as_raw().iter().map(|&v| v as f64).collect();
    let out = convolve_separable(&src, img.width(), img.height(), &kernel);
    Ok(FloatImage::from_vec_unchecked(img.width(), img.height(), out))
}

/// Central differences in the interior, one-sided differences on the border.
pub fn gradients(img: &GrayImage) -> Result<(FloatImage, FloatImage)> {
    gradients_float(&img.to_float())
}

pub fn gradients_float(img: &FloatImage) -> Result<(FloatImage, FloatImage)> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(invalid(format!("gradients need at least 3x3 pixels, got {w}x{h}")));
    }
    let mut gx = FloatImage::zeros(w, h);
    let mut gy = FloatImage::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let dx = match x {
                0 => img.get(1, y) - img.get(0, y),
                _ if x == w - 1 => img.get(x, y) - img.get(x - 1, y),
                _ => (img.get(x + 1, y) - img.get(x - 1, y)) / 2.0,
            };
            let dy = match y {
                0 => img.get(x, 1) - img.get(x, 0),
                _ if y == h - 1 => img.get(x, y) - img.get(x, y - 1),
                _ => (img.get(x, y + 1) - img.get(x, y - 1)) / 2.0,
            };
            gx.set(x, y, dx);
            gy.set(x, y, dy);
        }
    }
    Ok((gx, gy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        for sigma in [0.3f64, 1.0, 2.5] {
            let r = (3.0 * sigma).ceil() as usize;
            let k = gaussian_kernel(sigma, r);
            assert_eq!(k.len(), 2 * r + 1);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..r {
                assert_eq!(k[i], k[2 * r - i]);
            }
        }
    }

    #[test]
    fn smoothing_constant_image_is_identity() {
        let img = GrayImage::filled(9, 7, 50);
        for sigma in [0.5, 1.0, 3.0] {
            assert_eq!(gaussian_smooth(&img, sigma).unwrap(), img);
        }
    }

    #[test]
    fn smoothing_single_pixel_is_identity() {
        let img = GrayImage::filled(1, 1, 200);
        assert_eq!(gaussian_smooth(&img, 2.0).unwrap(), img);
    }

    #[test]
    fn smoothing_impulse_matches_kernel_product() {
        let mut img = GrayImage::filled(15, 15, 0);
        img.set(7, 7, 255);
        let out = gaussian_smooth_float(&img, 1.0).unwrap();
        let k = gaussian_kernel(1.0, 3);
        let expected = 255.0 * k[3] * k[3];
        assert!((out.get(7, 7) - expected).abs() < 1e-9);
        let rounded = gaussian_smooth(&img, 1.0).unwrap().get(7, 7);
        assert!((rounded as f64 - expected).abs() <= 0.5);
    }

    #[test]
    fn smoothing_rejects_nonpositive_sigma() {
        let img = GrayImage::filled(4, 4, 1);
        assert!(gaussian_smooth(&img, 0.0).is_err());
        assert!(gaussian_smooth(&img, -1.0).is_err());
        assert!(gaussian_smooth(&img, f64::NAN).is_err());
    }

    #[test]
    fn ramp_gradient() {
        let img = GrayImage::from_fn(8, 6, |x, _| x as u8);
        let (gx, gy) = gradients(&img).unwrap();
        for y in 1..5 {
            for x in 1..7 {
                assert_eq!(gx.get(x, y), 1.0);
                assert_eq!(gy.get(x, y), 0.0);
            }
        }
    }

    #[test]
    fn constant_gradient_is_zero() {
        let (gx, gy) = gradients(&GrayImage::filled(5, 5, 99)).unwrap();
        assert!(gx.as_slice().iter().chain(gy.as_slice()).all(|&v| v == 0.0));
    }

    #[test]
    fn step_gradient_peaks_at_the_edge() {
        let k = 5;
        let img = GrayImage::from_fn(10, 4, |x, _| if x < k { 0 } else { 255 });
        let (gx, _) = gradients(&img).unwrap();
        for y in 0..4 {
            assert_eq!(gx.get(k - 1, y), 127.5);
            assert_eq!(gx.get(k, y), 127.5);
            assert_eq!(gx.get(k - 2, y), 0.0);
            assert_eq!(gx.get(k + 1, y), 0.0);
        }
    }

    #[test]
    fn gradients_reject_small_images() {
        assert!(gradients(&GrayImage::filled(2, 5, 0)).is_err());
        assert!(gradients(&GrayImage::filled(5, 2, 0)).is_err());
    }
}
