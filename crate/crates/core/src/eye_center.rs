//! Pupil localization from image gradients.
//!
//! Every candidate center `c` is scored by how well the displacement vectors
//! from `c` to strong-gradient pixels line up with the gradients there,
//! scaled by a darkness prior at `c`. The best interior local maximum of the
//! resulting map is the eye center.

use crate::error::{Error, Result};
use crate::imgcore::{
    crop, gaussian_smooth_float, gradients_float, resize_bilinear, FloatImage, GrayImage, Point, Rect,
};

/// How the per-candidate weight is derived from the smoothed intensity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WeightPolarity {
    /// `255 - I(c)`: dark candidates score higher.
    #[default]
    Inverted,
    /// `I(c)` as written in the original objective.
    Literal,
    /// Weight 1 everywhere (the bare alignment objective).
    Uniform,
}

impl std::str::FromStr for WeightPolarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverted" => Ok(Self::Inverted),
            "literal" => Ok(Self::Literal),
            "uniform" => Ok(Self::Uniform),
            _ => Err(Error::InvalidInput(format!("unknown weight polarity {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EyeCenterParams {
    pub polarity: WeightPolarity,
    /// Drop anti-parallel alignments instead of rewarding them when squared.
    pub clamp_negative: bool,
    /// Participation cutoff in standard deviations above the mean magnitude.
    pub gradient_threshold: f64,
    pub sigma: f64,
    /// Wider regions are downscaled to this width first; `None` keeps full resolution.
    pub max_width: Option<usize>,
}

impl Default for EyeCenterParams {
    fn default() -> Self {
        Self {
            polarity: WeightPolarity::Inverted,
            clamp_negative: true,
            gradient_threshold: 0.3,
            sigma: 1.0,
            max_width: Some(50),
        }
    }
}

/// Left and right eye search areas, in face coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EyeRegions {
    pub left: Rect,
    pub right: Rect,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientSample {
    pub x: f64,
    pub y: f64,
    /// Unit gradient direction.
    pub gx: f64,
    pub gy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveMap {
    pub values: FloatImage,
    pub weights: FloatImage,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EyeCenter {
    pub point: Point,
    /// Objective value at the chosen center.
    pub confidence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct EyeCenters {
    pub left: Option<EyeCenter>,
    pub right: Option<EyeCenter>,
}

impl EyeCenters {
    pub fn present(&self) -> usize {
        self.left.is_some() as usize + self.right.is_some() as usize
    }
}

const MIN_FACE: usize = 40;
const MIN_REGION: usize = 8;

fn frac(v: usize, f: f64) -> usize {
    (v as f64 * f).round() as usize
}

pub fn eye_regions_from_face(face: Rect) -> Result<EyeRegions> {
    if face.w < MIN_FACE || face.h < MIN_FACE {
        return Err(Error::FaceTooSmall {
            width: face.w,
            height: face.h,
        });
    }
    let (y0, y1) = (frac(face.h, 0.20), frac(face.h, 0.55));
    let span = |a: f64, b: f64| {
        let (x0, x1) = (frac(face.w, a), frac(face.w, b));
        Rect::new(face.x + x0, face.y + y0, x1 - x0, y1 - y0)
    };
    Ok(EyeRegions {
        left: span(0.10, 0.48),
        right: span(0.52, 0.90),
    })
}

/// Smoothed intensity plus the participating unit gradients.
pub fn gradient_samples(region: &GrayImage, params: &EyeCenterParams) -> Result<(FloatImage, Vec<GradientSample>)> {
    if region.width() < MIN_REGION || region.height() < MIN_REGION {
        return Err(Error::InvalidInput(format!(
            "eye region {}x{} is below {MIN_REGION}x{MIN_REGION}",
            region.width(),
            region.height()
        )));
    }
    let smooth = gaussian_smooth_float(region, params.sigma)?;
    let (gx, gy) = gradients_float(&smooth)?;
    let mags: Vec<f64> = gx
        .as_slice()
        .iter()
        .zip(gy.as_slice())
        .map(|(a, b)| a.hypot(*b))
        .collect();
    let n = mags.len() as f64;
    let mean = mags.iter().sum::<f64>() / n;
    let std = (mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n).sqrt();
    let cutoff = mean + params.gradient_threshold * std;
    let w = region.width();
    let samples: Vec<GradientSample> = mags
        .iter()
        .enumerate()
        .filter(|&(_, &m)| m > cutoff && m > 0.0)
        .map(|(i, &m)| GradientSample {
            x: (i % w) as f64,
            y: (i / w) as f64,
            gx: gx.as_slice()[i] / m,
            gy: gy.as_slice()[i] / m,
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::NoGradients);
    }
    Ok((smooth, samples))
}

fn weight(polarity: WeightPolarity, intensity: f64) -> f64 {
    match polarity {
        WeightPolarity::Inverted => 255.0 - intensity,
        WeightPolarity::Literal => intensity,
        WeightPolarity::Uniform => 1.0,
    }
    .max(0.0)
}

pub fn objective_map(region: &GrayImage, params: &EyeCenterParams) -> Result<ObjectiveMap> {
    let (smooth, samples) = gradient_samples(region, params)?;
    let (w, h) = (region.width(), region.height());
    let inv_n = 1.0 / samples.len() as f64;
    let mut values = vec![0.0; w * h];
    let mut weights = vec![0.0; w * h];
    for cy in 0..h {
        for cx in 0..w {
            let (fx, fy) = (cx as f64, cy as f64);
            let mut acc = 0.0;
            for s in &samples {
                let (dx, dy) = (s.x - fx, s.y - fy);
                let d2 = dx * dx + dy * dy;
                if d2 == 0.0 {
                    continue;
                }
                let dot = dx * s.gx + dy * s.gy;
                if params.clamp_negative && dot <= 0.0 {
                    continue;
                }
                acc += dot * dot / d2;
            }
            let wc = weight(params.polarity, smooth.get(cx, cy));
            weights[cy * w + cx] = wc;
            values[cy * w + cx] = wc * acc * inv_n;
        }
    }
    Ok(ObjectiveMap {
        values: FloatImage::from_vec_unchecked(w, h, values),
        weights: FloatImage::from_vec_unchecked(w, h, weights),
    })
}

/// Best local maximum of `map` that does not touch the border. Plateaus of
/// equal value are treated as one maximum, represented by their first
/// pixel in (y, x) order.
pub fn interior_maximum(map: &FloatImage) -> Option<(Point, f64)> {
    let (w, h) = (map.width(), map.height());
    let v = map.as_slice();
    let mut seen = vec![false; w * h];
    let mut best: Option<(Point, f64)> = None;
    let mut stack = Vec::new();
    let mut members = Vec::new();
    for start in 0..w * h {
        if seen[start] || v[start] <= 0.0 {
            continue;
        }
        let level = v[start];
        let mut is_max = true;
        let mut touches_border = false;
        members.clear();
        stack.push(start);
        seen[start] = true;
        while let Some(i) = stack.pop() {
            members.push(i);
            let (x, y) = (i % w, i / w);
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                touches_border = true;
            }
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if v[j] > level {
                        is_max = false;
                    } else if v[j] == level && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if !is_max || touches_border {
            continue;
        }
        let first = *members.iter().min().expect("plateau is non-empty");
        let p = Point::new(first % w, first / w);
        let better = match best {
            None => true,
            Some((bp, bv)) => level > bv || (level == bv && (p.y, p.x) < (bp.y, bp.x)),
        };
        if better {
            best = Some((p, level));
        }
    }
    best
}

/// Eye center inside `region` (region coordinates) and its objective value.
pub fn locate_center(region: &GrayImage, params: &EyeCenterParams) -> Result<(Point, f64)> {
    let (w, h) = (region.width(), region.height());
    let limit = params.max_width.filter(|&m| w > m && m >= MIN_REGION);
    let Some(target_w) = limit else {
        let map = objective_map(region, params)?;
        return interior_maximum(&map.values).ok_or(Error::NoInteriorMaximum);
    };
    let target_h = ((h as f64 * target_w as f64 / w as f64).round() as usize).max(MIN_REGION);
    let small = resize_bilinear(region, target_w, target_h)?;
    let map = objective_map(&small, params)?;
    let (p, value) = interior_maximum(&map.values).ok_or(Error::NoInteriorMaximum)?;
    let back = |c: usize, from: usize, to: usize| {
        if from <= 1 {
            return to / 2;
        }
        ((c as f64 * (to - 1) as f64 / (from - 1) as f64).round() as usize).min(to - 1)
    };
    Ok((Point::new(back(p.x, target_w, w), back(p.y, target_h, h)), value))
}

/// Locates both pupils on a face chip. An eye whose region yields no
/// usable maximum is reported absent.
pub fn track_eyes(face: &GrayImage, regions: &EyeRegions, params: &EyeCenterParams) -> Result<EyeCenters> {
    let bounds = face.bounds();
    if !bounds.contains_rect(&regions.left) || !bounds.contains_rect(&regions.right) {
        return Err(Error::InvalidInput("eye regions exceed the face image".into()));
    }
    let one = |r: Rect| -> Result<Option<EyeCenter>> {
        let region = crop(face, r)?;
        match locate_center(&region, params) {
            Ok((p, confidence)) => Ok(Some(EyeCenter {
                point: Point::new(r.x + p.x, r.y + p.y),
                confidence,
            })),
            Err(Error::NoGradients | Error::NoInteriorMaximum) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let (left, right) = rayon::join(|| one(regions.left), || one(regions.right));
    Ok(EyeCenters {
        left: left?,
        right: right?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{annulus, disk};

    fn argmax(map: &FloatImage) -> Point {
        let mut best = (Point::new(0, 0), f64::MIN);
        for y in 0..map.height() {
            for x in 0..map.width() {
                if map.get(x, y) > best.1 {
                    best = (Point::new(x, y), map.get(x, y));
                }
            }
        }
        best.0
    }

    #[test]
    fn regions_for_square_face() {
        let r = eye_regions_from_face(Rect::new(0, 0, 100, 100)).unwrap();
        assert_eq!(r.left, Rect::new(10, 20, 38, 35));
        assert_eq!(r.right, Rect::new(52, 20, 38, 35));
        let r = eye_regions_from_face(Rect::new(5, 7, 100, 100)).unwrap();
        assert_eq!(r.left, Rect::new(15, 27, 38, 35));
    }

    #[test]
    fn regions_for_minimum_face() {
        let r = eye_regions_from_face(Rect::new(0, 0, 40, 40)).unwrap();
        assert!(r.left.w >= 15 && r.left.h >= 14, "{r:?}");
        assert!(r.right.w >= 15 && r.right.h >= 14, "{r:?}");
        assert!(r.left.right() <= r.right.x);
        assert!(matches!(
            eye_regions_from_face(Rect::new(0, 0, 39, 40)),
            Err(Error::FaceTooSmall { width: 39, height: 40 })
        ));
    }

    #[test]
    fn flat_region_has_no_gradients() {
        let img = GrayImage::filled(20, 20, 128);
        assert!(matches!(
            objective_map(&img, &EyeCenterParams::default()),
            Err(Error::NoGradients)
        ));
        assert!(matches!(
            locate_center(&img, &EyeCenterParams::default()),
            Err(Error::NoGradients)
        ));
    }

    #[test]
    fn tiny_region_is_rejected() {
        let img = GrayImage::filled(7, 20, 128);
        assert!(matches!(
            objective_map(&img, &EyeCenterParams::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn dark_disk_center() {
        let img = disk(40, 30, (20.0, 15.0), 6.0, 30, 220);
        let (p, conf) = locate_center(&img, &EyeCenterParams::default()).unwrap();
        assert!(p.distance(Point::new(20, 15)) <= 2.0, "{p:?}");
        assert!(conf > 0.0);
    }

    #[test]
    fn translation_moves_the_center() {
        let params = EyeCenterParams::default();
        let a = argmax(
            &objective_map(&disk(40, 30, (20.0, 15.0), 6.0, 30, 220), &params)
                .unwrap()
                .values,
        );
        let b = argmax(
            &objective_map(&disk(40, 30, (25.0, 18.0), 6.0, 30, 220), &params)
                .unwrap()
                .values,
        );
        assert!(b.x.abs_diff(a.x + 5) <= 1 && b.y.abs_diff(a.y + 3) <= 1, "{a:?} {b:?}");
    }

    #[test]
    fn annulus_center() {
        let img = annulus(50, 40, (25.0, 20.0), 4.0, 7.0, 40, 210);
        let bare = EyeCenterParams {
            polarity: WeightPolarity::Uniform,
            ..Default::default()
        };
        let (p, _) = locate_center(&img, &bare).unwrap();
        assert!(p.distance(Point::new(25, 20)) <= 2.0, "{p:?}");
        // The darkness prior favors the ring over its bright hole.
        let (q, _) = locate_center(&img, &EyeCenterParams::default()).unwrap();
        assert!(q.distance(Point::new(25, 20)) > 2.0, "{q:?}");
    }

    #[test]
    fn weighting_moves_bright_disk_maximum() {
        let img = disk(40, 30, (20.0, 15.0), 6.0, 220, 30);
        let bare = EyeCenterParams {
            polarity: WeightPolarity::Uniform,
            clamp_negative: false,
            ..Default::default()
        };
        let weighted = EyeCenterParams {
            clamp_negative: false,
            ..Default::default()
        };
        let a = argmax(&objective_map(&img, &bare).unwrap().values);
        let b = argmax(&objective_map(&img, &weighted).unwrap().values);
        assert!(a.distance(Point::new(20, 15)) <= 1.0, "{a:?}");
        assert!(b.distance(Point::new(20, 15)) > 2.0, "{b:?}");
    }

    #[test]
    fn polarity_duality() {
        // Squared alignment ignores the gradient sign, so inverting the image
        // and the weight together leaves the map unchanged.
        let dark = disk(40, 30, (18.0, 14.0), 5.0, 40, 210);
        let bright = GrayImage::from_fn(40, 30, |x, y| 255 - dark.get(x, y));
        let inv = EyeCenterParams {
            clamp_negative: false,
            ..Default::default()
        };
        let lit = EyeCenterParams {
            clamp_negative: false,
            polarity: WeightPolarity::Literal,
            ..Default::default()
        };
        let a = objective_map(&dark, &inv).unwrap();
        let b = objective_map(&bright, &lit).unwrap();
        assert_eq!(argmax(&a.values), argmax(&b.values));
        for (x, y) in a.values.as_slice().iter().zip(b.values.as_slice()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn center_beats_distant_candidates() {
        let img = disk(40, 30, (20.0, 15.0), 6.0, 30, 220);
        let map = objective_map(&img, &EyeCenterParams::default()).unwrap().values;
        let peak = map.get(20, 15);
        for y in 0..30 {
            for x in 0..40 {
                if Point::new(x, y).distance(Point::new(20, 15)) >= 5.0 {
                    assert!(map.get(x, y) < peak, "({x},{y})");
                }
            }
        }
    }

    #[test]
    fn downscaled_search_agrees() {
        let img = disk(100, 70, (47.0, 33.0), 12.0, 30, 220);
        let fast = locate_center(&img, &EyeCenterParams::default()).unwrap().0;
        let exact = locate_center(
            &img,
            &EyeCenterParams {
                max_width: None,
                ..Default::default()
            },
        )
        .unwrap()
        .0;
        assert!(fast.distance(exact) <= 3.0, "{fast:?} {exact:?}");
        assert!(exact.distance(Point::new(47, 33)) <= 2.0);
    }

    #[test]
    fn border_maxima_are_pruned() {
        let mut map = FloatImage::zeros(5, 5);
        map.set(0, 2, 9.0);
        assert_eq!(interior_maximum(&map), None);
        map.set(2, 2, 3.0);
        assert_eq!(interior_maximum(&map), Some((Point::new(2, 2), 3.0)));
        map.set(3, 2, 3.0);
        assert_eq!(interior_maximum(&map), Some((Point::new(2, 2), 3.0)));
        map.set(4, 2, 3.0);
        assert_eq!(interior_maximum(&map), None);
    }

    #[test]
    fn equal_peaks_pick_top_left() {
        let mut map = FloatImage::zeros(9, 9);
        map.set(6, 2, 5.0);
        map.set(2, 6, 5.0);
        map.set(2, 2, 4.0);
        assert_eq!(interior_maximum(&map), Some((Point::new(6, 2), 5.0)));
    }

    #[test]
    fn track_eyes_reports_each_eye() {
        let mut face = GrayImage::filled(100, 100, 200);
        let regions = eye_regions_from_face(Rect::new(0, 0, 100, 100)).unwrap();
        for (cx, cy) in [(29usize, 37usize), (71, 37)] {
            for y in 0..100 {
                for x in 0..100 {
                    if (x as f64 - cx as f64).hypot(y as f64 - cy as f64) <= 5.0 {
                        face.set(x, y, 30);
                    }
                }
            }
        }
        let both = track_eyes(&face, &regions, &EyeCenterParams::default()).unwrap();
        let l = both.left.unwrap().point;
        let r = both.right.unwrap().point;
        assert!(l.distance(Point::new(29, 37)) <= 2.0, "{l:?}");
        assert!(r.distance(Point::new(71, 37)) <= 2.0, "{r:?}");

        let mut one = face.clone();
        for y in 20..55 {
            for x in 52..90 {
                one.set(x, y, 200);
            }
        }
        let c = track_eyes(&one, &regions, &EyeCenterParams::default()).unwrap();
        assert!(c.left.is_some() && c.right.is_none());

        let closed = GrayImage::filled(100, 100, 180);
        assert_eq!(
            track_eyes(&closed, &regions, &EyeCenterParams::default()).unwrap(),
            EyeCenters::default()
        );
    }
}
