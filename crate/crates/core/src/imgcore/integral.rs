use super::{GrayImage, Rect};

/// Summed-area tables of intensities and squared intensities.
///
/// Both tables have `(width + 1) x (height + 1)` entries with a zero first
/// row and column, so any rectangle sum is four lookups.
#[derive(Clone, Debug)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sums: Vec<u64>,
    squared: Vec<u64>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width(), img.height());
        let stride = w + 1;
        let mut sums = vec![0u64; stride * (h + 1)];
        let mut squared = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            let mut row_sq = 0u64;
            for x in 0..w {
                let v = img.get(x, y) as u64;
                row += v;
                row_sq += v * v;
                let i = (y + 1) * stride + x + 1;
                sums[i] = sums[i - stride] + row;
                squared[i] = squared[i - stride] + row_sq;
            }
        }
        Self {
            width: w,
            height: h,
            sums,
            squared,
        }
    }

    /// Width of the source image.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Table entry: sum over `[0, x) x [0, y)`.
    #[inline]
    pub fn sum_at(&self, x: usize, y: usize) -> u64 {
        self.sums[y * (self.width + 1) + x]
    }

    #[inline]
    pub fn squared_sum_at(&self, x: usize, y: usize) -> u64 {
        self.squared[y * (self.width + 1) + x]
    }

    #[inline]
    pub fn rect_sum(&self, r: Rect) -> u64 {
        let s = self.width + 1;
        let (a, b) = (r.y * s + r.x, r.y * s + r.right());
        let (c, d) = (r.bottom() * s + r.x, r.bottom() * s + r.right());
        self.sums[d] + self.sums[a] - self.sums[b] - self.sums[c]
    }

    #[inline]
    pub fn rect_squared_sum(&self, r: Rect) -> u64 {
        let s = self.width + 1;
        let (a, b) = (r.y * s + r.x, r.y * s + r.right());
        let (c, d) = (r.bottom() * s + r.x, r.bottom() * s + r.right());
        self.squared[d] + self.squared[a] - self.squared[b] - self.squared[c]
    }

    pub(crate) fn stride(&self) -> usize {
        self.width + 1
    }

    pub(crate) fn raw_sums(&self) -> &[u64] {
        &self.sums
    }

    pub(crate) fn raw_squared(&self) -> &[u64] {
        &self.squared
    }

    /// Square window of the given radius around `(cx, cy)`, clipped to the
    /// image, and the number of pixels it covers.
    #[inline]
    pub(crate) fn clipped_window(&self, cx: usize, cy: usize, radius: usize) -> (Rect, usize) {
        let x0 = cx.saturating_sub(radius);
        let y0 = cy.saturating_sub(radius);
        let x1 = (cx + radius + 1).min(self.width);
        let y1 = (cy + radius + 1).min(self.height);
        let r = Rect::new(x0, y0, x1 - x0, y1 - y0);
        (r, r.area())
    }
}
