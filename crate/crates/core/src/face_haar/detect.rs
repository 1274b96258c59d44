use rayon::prelude::*;

use super::cascade::CascadeModel;
use crate::error::{invalid, Result};
use crate::imgcore::{GrayImage, IntegralImage, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Detection {
    pub rect: Rect,
    /// Number of raw window hits merged into this detection.
    pub neighbors: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectParams {
    pub scale_factor: f64,
    pub min_neighbors: usize,
    /// Smallest window side considered, in pixels.
    pub min_size: usize,
    pub max_size: Option<usize>,
    pub group_eps: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            scale_factor: 1.1,
            min_neighbors: 3,
            min_size: 24,
            max_size: None,
            group_eps: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct ScaledRect {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    weight: f64,
}

#[derive(Clone, Debug)]
struct ScaledStump {
    rects: [ScaledRect; 3],
    n: usize,
    threshold: f64,
    left: f64,
    right: f64,
}

/// A cascade with every feature rectangle resampled for one window scale.
#[derive(Clone, Debug)]
pub struct ScaledCascade {
    win_w: usize,
    win_h: usize,
    norm: Rect,
    inv_area: f64,
    stages: Vec<(f64, Vec<ScaledStump>)>,
}

fn scaled(v: usize, s: f64) -> usize {
    (v as f64 * s).round() as usize
}

impl ScaledCascade {
    pub fn new(model: &CascadeModel, scale: f64) -> Self {
        let win_w = scaled(model.base_width, scale).max(1);
        let win_h = scaled(model.base_height, scale).max(1);
        // Variance is measured on the window inset by one base pixel.
        let inset = scaled(1, scale);
        let norm = Rect::new(
            inset.min(win_w - 1),
            inset.min(win_h - 1),
            scaled(model.base_width.saturating_sub(2).max(1), scale).clamp(1, win_w),
            scaled(model.base_height.saturating_sub(2).max(1), scale).clamp(1, win_h),
        );
        let norm = Rect::new(norm.x, norm.y, norm.w.min(win_w - norm.x), norm.h.min(win_h - norm.y));
        let stages = model
            .stages
            .iter()
            .map(|stage| {
                let weak = stage
                    .weak
                    .iter()
                    .map(|wc| {
                        let mut rects = [ScaledRect {
                            x: 0,
                            y: 0,
                            w: 0,
                            h: 0,
                            weight: 0.0,
                        }; 3];
                        let n = wc.feature.rects.len().min(3);
                        let mut base_balance = 0.0;
                        let mut base_mag = 0.0;
                        for (dst, src) in rects.iter_mut().zip(&wc.feature.rects) {
                            let x = scaled(src.rect.x, scale).min(win_w - 1);
                            let y = scaled(src.rect.y, scale).min(win_h - 1);
                            let w = scaled(src.rect.w, scale).clamp(1, win_w - x);
                            let h = scaled(src.rect.h, scale).clamp(1, win_h - y);
                            *dst = ScaledRect {
                                x,
                                y,
                                w,
                                h,
                                weight: src.weight,
                            };
                            let a = src.weight * src.rect.area() as f64;
                            base_balance += a;
                            base_mag += a.abs();
                        }
                        // Rounding breaks the zero-sum balance of the weighted
                        // areas; restore it through the first rectangle.
                        if base_balance.abs() <= 1e-6 * base_mag {
                            let rest: f64 = rects[1..n].iter().map(|r| r.weight * (r.w * r.h) as f64).sum();
                            rects[0].weight = -rest / (rects[0].w * rects[0].h) as f64;
                        }
                        ScaledStump {
                            rects,
                            n,
                            threshold: wc.threshold,
                            left: wc.left,
                            right: wc.right,
                        }
                    })
                    .collect();
                (stage.threshold, weak)
            })
            .collect();
        Self {
            win_w,
            win_h,
            norm,
            inv_area: 1.0 / norm.area() as f64,
            stages,
        }
    }

    pub fn window_size(&self) -> (usize, usize) {
        (self.win_w, self.win_h)
    }

    /// Runs the cascade on the window whose top-left corner is `(x, y)`.
    /// The window must lie inside the integral image.
    pub fn accepts(&self, ii: &IntegralImage, x: usize, y: usize) -> bool {
        let nr = Rect::new(x + self.norm.x, y + self.norm.y, self.norm.w, self.norm.h);
        let s = ii.rect_sum(nr) as f64;
        let sq = ii.rect_squared_sum(nr) as f64;
        let mean = s * self.inv_area;
        let var = sq * self.inv_area - mean * mean;
        let sigma = if var > 0.0 { var.sqrt() } else { 1.0 };
        let norm = self.inv_area / sigma;
        for (stage_threshold, weak) in &self.stages {
            let mut sum = 0.0;
            for stump in weak {
                let mut value = 0.0;
                for r in &stump.rects[..stump.n] {
                    value += r.weight * ii.rect_sum(Rect::new(x + r.x, y + r.y, r.w, r.h)) as f64;
                }
                sum += if value * norm < stump.threshold {
                    stump.left
                } else {
                    stump.right
                };
            }
            if sum < *stage_threshold {
                return false;
            }
        }
        true
    }
}

/// Corner offsets of a rectangle relative to a window's top-left table entry.
#[derive(Clone, Copy, Debug, Default)]
struct Corners([usize; 4]);

impl Corners {
    fn new(x: usize, y: usize, w: usize, h: usize, stride: usize) -> Self {
        let a = y * stride + x;
        Self([a, a + w, a + h * stride, a + h * stride + w])
    }

    #[inline]
    fn sum(&self, table: &[u64], base: usize) -> u64 {
        let [a, b, c, d] = self.0;
        table[base + d] + table[base + a] - table[base + b] - table[base + c]
    }
}

#[derive(Clone, Debug)]
struct FlatStump {
    corners: [Corners; 3],
    weights: [f64; 3],
    n: usize,
    threshold: f64,
    left: f64,
    right: f64,
}

/// A scaled cascade bound to one integral-image stride, so rectangle sums
/// are plain offset lookups.
#[derive(Clone, Debug)]
struct CompiledCascade {
    norm: Corners,
    inv_area: f64,
    stages: Vec<(f64, std::ops::Range<usize>)>,
    stumps: Vec<FlatStump>,
}

impl CompiledCascade {
    fn new(sc: &ScaledCascade, stride: usize) -> Self {
        let mut stumps = Vec::new();
        let mut stages = Vec::with_capacity(sc.stages.len());
        for (threshold, weak) in &sc.stages {
            let start = stumps.len();
            for st in weak {
                let mut corners = [Corners::default(); 3];
                let mut weights = [0.0; 3];
                for (i, r) in st.rects[..st.n].iter().enumerate() {
                    corners[i] = Corners::new(r.x, r.y, r.w, r.h, stride);
                    weights[i] = r.weight;
                }
                stumps.push(FlatStump {
                    corners,
                    weights,
                    n: st.n,
                    threshold: st.threshold,
                    left: st.left,
                    right: st.right,
                });
            }
            stages.push((*threshold, start..stumps.len()));
        }
        let n = sc.norm;
        Self {
            norm: Corners::new(n.x, n.y, n.w, n.h, stride),
            inv_area: sc.inv_area,
            stages,
            stumps,
        }
    }

    #[inline]
    fn accepts(&self, sums: &[u64], squared: &[u64], base: usize) -> bool {
        let mean = self.norm.sum(sums, base) as f64 * self.inv_area;
        let var = self.norm.sum(squared, base) as f64 * self.inv_area - mean * mean;
        let sigma = if var > 0.0 { var.sqrt() } else { 1.0 };
        let norm = self.inv_area / sigma;
        for (stage_threshold, range) in &self.stages {
            let mut sum = 0.0;
            for st in &self.stumps[range.clone()] {
                let mut value = st.weights[0] * st.corners[0].sum(sums, base) as f64
                    + st.weights[1] * st.corners[1].sum(sums, base) as f64;
                if st.n == 3 {
                    value += st.weights[2] * st.corners[2].sum(sums, base) as f64;
                }
                sum += if value * norm < st.threshold { st.left } else { st.right };
            }
            if sum < *stage_threshold {
                return false;
            }
        }
        true
    }
}

/// Evaluates the cascade on one window. `window` gives the position; its
/// extent is implied by `scale` and the model's base size.
pub fn evaluate_window(model: &CascadeModel, ii: &IntegralImage, window: Rect, scale: f64) -> bool {
    let sc = ScaledCascade::new(model, scale.max(1.0));
    let (w, h) = sc.window_size();
    if window.x + w > ii.width() || window.y + h > ii.height() {
        return false;
    }
    sc.accepts(ii, window.x, window.y)
}

/// Raw accepted windows over every scale, before grouping.
pub fn scan_windows(model: &CascadeModel, img: &GrayImage, params: &DetectParams) -> Result<Vec<Rect>> {
    if !params.scale_factor.is_finite() || params.scale_factor <= 1.0 {
        return Err(invalid(format!(
            "scale factor must exceed 1, got {}",
            params.scale_factor
        )));
    }
    let base = model.base_width.max(model.base_height);
    if params.min_size < base {
        return Err(invalid(format!(
            "minimum size {} is below the {}x{} base window",
            params.min_size, model.base_width, model.base_height
        )));
    }
    let ii = IntegralImage::new(img);
    let mut hits = Vec::new();
    let mut scale = 1.0f64;
    loop {
        let win_w = scaled(model.base_width, scale);
        let win_h = scaled(model.base_height, scale);
        if win_w > img.width() || win_h > img.height() {
            break;
        }
        if params.max_size.is_some_and(|m| win_w.max(win_h) > m) {
            break;
        }
        if win_w.min(win_h) >= params.min_size {
            let cc = CompiledCascade::new(&ScaledCascade::new(model, scale), ii.stride());
            let (sums, squared, stride) = (ii.raw_sums(), ii.raw_squared(), ii.stride());
            let step = (scale.round() as usize).max(1);
            let ys: Vec<usize> = (0..=img.height() - win_h).step_by(step).collect();
            let level: Vec<Rect> = ys
                .par_iter()
                .flat_map_iter(|&y| {
                    let cc = &cc;
                    (0..=img.width() - win_w)
                        .step_by(step)
                        .filter(move |&x| cc.accepts(sums, squared, y * stride + x))
                        .map(move |x| Rect::new(x, y, win_w, win_h))
                })
                .collect();
            hits.extend(level);
        }
        scale *= params.scale_factor;
    }
    Ok(hits)
}

pub fn detect_multiscale(model: &CascadeModel, img: &GrayImage, params: &DetectParams) -> Result<Vec<Detection>> {
    let hits = scan_windows(model, img, params)?;
    Ok(group_rectangles(
        &hits,
        params.min_neighbors,
        params.group_eps,
        img.bounds(),
    ))
}

fn similar(a: &Rect, b: &Rect, eps: f64) -> bool {
    let delta = eps * (a.w.min(b.w) + a.h.min(b.h)) as f64 * 0.5;
    let close = |p: usize, q: usize| (p as f64 - q as f64).abs() <= delta;
    close(a.x, b.x) && close(a.y, b.y) && close(a.right(), b.right()) && close(a.bottom(), b.bottom())
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Clusters raw hits under the overlap predicate (transitively), averages
/// each cluster, drops clusters with fewer than `min_neighbors` members, and
/// sorts by area descending (ties by top, then left).
pub fn group_rectangles(hits: &[Rect], min_neighbors: usize, eps: f64, bounds: Rect) -> Vec<Detection> {
    let n = hits.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if similar(&hits[i], &hits[j], eps) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: std::collections::BTreeMap<usize, (usize, [usize; 4])> = Default::default();
    for (i, r) in hits.iter().enumerate() {
        let root = find(&mut parent, i);
        let e = clusters.entry(root).or_insert((0, [0; 4]));
        e.0 += 1;
        e.1[0] += r.x;
        e.1[1] += r.y;
        e.1[2] += r.w;
        e.1[3] += r.h;
    }
    let mut out: Vec<Detection> = clusters
        .into_values()
        .filter(|(count, _)| *count >= min_neighbors.max(1))
        .map(|(count, s)| {
            let avg = |v: usize| (v as f64 / count as f64).round() as usize;
            let (x, y) = (
                avg(s[0]).min(bounds.right().saturating_sub(1)),
                avg(s[1]).min(bounds.bottom().saturating_sub(1)),
            );
            let w = avg(s[2]).clamp(1, bounds.right() - x);
            let h = avg(s[3]).clamp(1, bounds.bottom() - y);
            Detection {
                rect: Rect::new(x, y, w, h),
                neighbors: count,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.rect
            .area()
            .cmp(&a.rect.area())
            .then(a.rect.y.cmp(&b.rect.y))
            .then(a.rect.x.cmp(&b.rect.x))
    });
    out
}

/// The largest detection; equal areas resolve to the topmost, then leftmost.
pub fn primary_face(dets: &[Detection]) -> Option<Rect> {
    dets.iter()
        .min_by(|a, b| {
            b.rect
                .area()
                .cmp(&a.rect.area())
                .then(a.rect.y.cmp(&b.rect.y))
                .then(a.rect.x.cmp(&b.rect.x))
        })
        .map(|d| d.rect)
}
