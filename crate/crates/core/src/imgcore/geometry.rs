use super::GrayImage;
use crate::error::{invalid, Result};

/// Axis-aligned rectangle: top-left corner plus extent, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    #[inline]
    pub fn area(&self) -> usize {
        self.w * self.h
    }

    #[inline]
    pub fn right(&self) -> usize {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x && other.y >= self.y && other.right() <= self.right() && other.bottom() <= self.bottom()
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.x && p.y >= self.y && p.x < self.right() && p.y < self.bottom()
    }

    /// Center in real coordinates.
    pub fn center(&self) -> (f64, f64) {
        (self.x as f64 + self.w as f64 / 2.0, self.y as f64 + self.h as f64 / 2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Point {
    pub x: usize,
    pub y: usize,
}

impl Point {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

pub fn crop(img: &GrayImage, r: Rect) -> Result<GrayImage> {
    if r.w == 0 || r.h == 0 || !img.bounds().contains_rect(&r) {
        return Err(invalid(format!(
            "crop rectangle {:?} is not inside {}x{}",
            r,
            img.width(),
            img.height()
        )));
    }
    let src = img.as_raw();
    let mut data = Vec::with_capacity(r.area());
    for y in r.y..r.bottom() {
        let row = y * img.width();
        data.extend_from_slice(&src[row + r.x..row + r.right()]);
    }
    GrayImage::new(r.w, r.h, data)
}

// Corner-aligned source coordinate for destination index `i`.
#[inline]
fn source_coord(i: usize, dst: usize, src: usize) -> f64 {
    if dst == 1 {
        (src as f64 - 1.0) / 2.0
    } else {
        i as f64 * (src as f64 - 1.0) / (dst as f64 - 1.0)
    }
}

/// Bilinear resampling with corner-aligned mapping: the first and last
/// destination samples coincide with the first and last source samples.
pub fn resize_bilinear(img: &GrayImage, width: usize, height: usize) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(invalid("resize target dimensions must be positive"));
    }
    if width == img.width() && height == img.height() {
        return Ok(img.clone());
    }
    let (sw, sh) = (img.width(), img.height());
    let xs: Vec<(usize, usize, f64)> = (0..width)
        .map(|i| {
            let sx = source_coord(i, width, sw);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(sw - 1);
            (x0, x1, sx - x0 as f64)
        })
        .collect();
    let mut data = Vec::with_capacity(width * height);
    for j in 0..height {
        let sy = source_coord(j, height, sh);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let fy = sy - y0 as f64;
        for &(x0, x1, fx) in &xs {
            let top = img.get(x0, y0) as f64 * (1.0 - fx) + img.get(x1, y0) as f64 * fx;
            let bot = img.get(x0, y1) as f64 * (1.0 - fx) + img.get(x1, y1) as f64 * fx;
            let v = top * (1.0 - fy) + bot * fy;
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(width, height, data)
}
