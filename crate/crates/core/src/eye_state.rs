//! Per-frame eye openness: fixed 25x21 windows around each tracked pupil,
//! binarized, reduced to a white-pixel percentage. Also the single-image
//! open/closed classifier used for dataset evaluation.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::eye_center::{eye_regions_from_face, gradient_samples, track_eyes, EyeCenterParams, EyeCenters};
use crate::imgcore::{crop, resize_bilinear, GrayImage, Point, Rect};
use crate::thresholding::{apply_threshold, white_percentage, ThresholdMethod, WhitePercentage};

pub const WINDOW_WIDTH: usize = 25;
pub const WINDOW_HEIGHT: usize = 21;
/// Side of the normalized face chip.
pub const FACE_SIZE: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct EyeWindow {
    pub image: GrayImage,
    pub center: Point,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameObservation {
    pub frame_index: u64,
    pub timestamp: f64,
    pub w_left: Option<WhitePercentage>,
    pub w_right: Option<WhitePercentage>,
    /// Mean of the present per-eye values.
    pub w_combined: Option<WhitePercentage>,
}

impl FrameObservation {
    pub fn new(frame_index: u64, fps: f64, w_left: Option<WhitePercentage>, w_right: Option<WhitePercentage>) -> Self {
        let w_combined = match (w_left, w_right) {
            (Some(a), Some(b)) => {
                Some(WhitePercentage::new((a.value() + b.value()) / 2.0).expect("mean stays in range"))
            }
            (a, b) => a.or(b),
        };
        Self {
            frame_index,
            timestamp: frame_index as f64 / fps,
            w_left,
            w_right,
            w_combined,
        }
    }

    /// Observation carrying a single combined value, for replaying recorded streams.
    pub fn from_combined(frame_index: u64, fps: f64, w: Option<f64>) -> Result<Self> {
        let w = w.map(WhitePercentage::new).transpose()?;
        Ok(Self {
            frame_index,
            timestamp: frame_index as f64 / fps,
            w_left: w,
            w_right: None,
            w_combined: w,
        })
    }
}

/// The 25x21 window centered on `center`, shifted to stay inside `face`.
pub fn extract_eye_window(face: &GrayImage, center: Point) -> Result<EyeWindow> {
    if !face.bounds().contains_point(center) {
        return Err(invalid(format!(
            "eye center ({}, {}) outside the face image",
            center.x, center.y
        )));
    }
    if face.width() < WINDOW_WIDTH || face.height() < WINDOW_HEIGHT {
        return Err(invalid("face image smaller than the eye window"));
    }
    let x = center
        .x
        .saturating_sub(WINDOW_WIDTH / 2)
        .min(face.width() - WINDOW_WIDTH);
    let y = center
        .y
        .saturating_sub(WINDOW_HEIGHT / 2)
        .min(face.height() - WINDOW_HEIGHT);
    let image = crop(face, Rect::new(x, y, WINDOW_WIDTH, WINDOW_HEIGHT))?;
    Ok(EyeWindow { image, center })
}

pub fn window_white(face: &GrayImage, center: Point, method: &ThresholdMethod) -> Result<WhitePercentage> {
    let window = extract_eye_window(face, center)?;
    Ok(white_percentage(&apply_threshold(&window.image, method)?))
}

pub fn observe_frame(
    face: &GrayImage,
    centers: &EyeCenters,
    method: &ThresholdMethod,
    frame_index: u64,
    fps: f64,
) -> Result<FrameObservation> {
    let measure = |c: Option<crate::eye_center::EyeCenter>| c.map(|c| window_white(face, c.point, method)).transpose();
    Ok(FrameObservation::new(
        frame_index,
        fps,
        measure(centers.left)?,
        measure(centers.right)?,
    ))
}

/// Resizes to the normalized chip, then tracks both eyes with the
/// anatomical-prior regions of a full-chip face.
pub fn face_chip_centers(chip: &GrayImage, params: &EyeCenterParams) -> Result<(GrayImage, EyeCenters)> {
    let chip = if chip.width() == FACE_SIZE && chip.height() == FACE_SIZE {
        chip.clone()
    } else {
        resize_bilinear(chip, FACE_SIZE, FACE_SIZE)?
    };
    let regions = eye_regions_from_face(chip.bounds())?;
    let centers = track_eyes(&chip, &regions, params)?;
    Ok((chip, centers))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EyeLabel {
    Open,
    Closed,
}

impl fmt::Display for EyeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Open => "open",
            Self::Closed => "closed",
        })
    }
}

/// Decision rule of the static classifier on an already-measured value:
/// no tracked eye means closed, otherwise closed iff `w >= tau`.
pub fn label_for(w: Option<f64>, tau: f64) -> EyeLabel {
    match w {
        Some(w) if w < tau => EyeLabel::Open,
        _ => EyeLabel::Closed,
    }
}

/// Combined white percentage of a face chip, `None` when neither eye tracks.
/// Chips without any gradient are `Unclassifiable`.
pub fn static_observation(chip: &GrayImage, params: &EyeCenterParams, method: &ThresholdMethod) -> Result<Option<f64>> {
    let (chip, centers) = face_chip_centers(chip, params)?;
    match gradient_samples(&chip, params) {
        Err(Error::NoGradients) => return Err(Error::Unclassifiable),
        Err(e) => return Err(e),
        Ok(_) => {}
    }
    let obs = observe_frame(&chip, &centers, method, 0, 1.0)?;
    Ok(obs.w_combined.map(WhitePercentage::value))
}

pub fn classify_static(
    chip: &GrayImage,
    tau: f64,
    params: &EyeCenterParams,
    method: &ThresholdMethod,
) -> Result<EyeLabel> {
    Ok(label_for(static_observation(chip, params, method)?, tau))
}

/// Candidate thresholds 0.0, 0.5, ..., 100.0.
pub fn static_tau_grid() -> impl Iterator<Item = f64> {
    (0..=200).map(|i| i as f64 * 0.5)
}

/// Accuracy of `label_for(_, tau)` over measured samples.
pub fn static_accuracy(samples: &[(Option<f64>, EyeLabel)], tau: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits = samples.iter().filter(|(w, l)| label_for(*w, tau) == *l).count();
    hits as f64 / samples.len() as f64
}

/// The grid threshold with the best accuracy (smallest on ties), and that accuracy.
pub fn calibrate_static_threshold(samples: &[(Option<f64>, EyeLabel)]) -> Result<(f64, f64)> {
    let has = |l| samples.iter().any(|(_, s)| *s == l);
    if !has(EyeLabel::Open) || !has(EyeLabel::Closed) {
        return Err(invalid("threshold calibration needs both open and closed samples"));
    }
    let mut best = (0.0, -1.0);
    for tau in static_tau_grid() {
        let acc = static_accuracy(samples, tau);
        if acc > best.1 {
            best = (tau, acc);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eye_center::EyeCenter;
    use crate::synth::{add_noise, disk};

    #[test]
    fn window_placement() {
        let face = GrayImage::from_fn(100, 100, |x, y| (x ^ (y << 1)) as u8);
        let check = |c: Point, x0: usize, y0: usize| {
            let w = extract_eye_window(&face, c).unwrap();
            assert_eq!((w.image.width(), w.image.height()), (25, 21));
            assert_eq!(w.image, crop(&face, Rect::new(x0, y0, 25, 21)).unwrap(), "{c:?}");
        };
        check(Point::new(50, 50), 38, 40);
        check(Point::new(2, 2), 0, 0);
        check(Point::new(99, 99), 75, 79);
        assert!(extract_eye_window(&face, Point::new(100, 5)).is_err());
    }

    fn centers(l: Option<(usize, usize)>, r: Option<(usize, usize)>) -> EyeCenters {
        let mk = |p: Option<(usize, usize)>| {
            p.map(|(x, y)| EyeCenter {
                point: Point::new(x, y),
                confidence: 1.0,
            })
        };
        EyeCenters {
            left: mk(l),
            right: mk(r),
        }
    }

    #[test]
    fn combined_value_rules() {
        let mut face = GrayImage::filled(100, 100, 200);
        for y in 30..45 {
            for x in 20..40 {
                face.set(x, y, 20 + ((x * 7 + y * 3) % 60) as u8);
            }
        }
        let m = ThresholdMethod::agbt();
        let l = window_white(&face, Point::new(30, 37), &m).unwrap().value();
        let r = window_white(&face, Point::new(70, 37), &m).unwrap().value();
        let both = observe_frame(&face, &centers(Some((30, 37)), Some((70, 37))), &m, 3, 30.0).unwrap();
        assert_eq!(both.w_combined.unwrap().value(), (l + r) / 2.0);
        assert_eq!(both.timestamp, 0.1);
        let one = observe_frame(&face, &centers(None, Some((70, 37))), &m, 0, 30.0).unwrap();
        assert_eq!(one.w_combined.unwrap().value(), r);
        let none = observe_frame(&face, &centers(None, None), &m, 0, 30.0).unwrap();
        assert_eq!(none.w_combined, None);
    }

    #[test]
    fn agbt_ignores_global_shift() {
        let mut base = disk(25, 21, (12.0, 10.0), 5.0, 90, 170);
        add_noise(&mut base, 4.0, 9);
        let m = ThresholdMethod::agbt();
        let w0 = white_percentage(&apply_threshold(&base, &m).unwrap());
        for b in [-20i32, -7, 5, 20] {
            let shifted = GrayImage::from_fn(25, 21, |x, y| (base.get(x, y) as i32 + b) as u8);
            assert_eq!(
                white_percentage(&apply_threshold(&shifted, &m).unwrap()),
                w0,
                "shift {b}"
            );
        }
    }

    #[test]
    fn decision_rule() {
        assert_eq!(label_for(None, 50.0), EyeLabel::Closed);
        assert_eq!(label_for(Some(10.0), 20.0), EyeLabel::Open);
        assert_eq!(label_for(Some(20.0), 20.0), EyeLabel::Closed);
    }

    #[test]
    fn flat_chip_is_unclassifiable() {
        let chip = GrayImage::filled(64, 64, 120);
        let r = classify_static(&chip, 50.0, &EyeCenterParams::default(), &ThresholdMethod::agbt());
        assert!(matches!(r, Err(Error::Unclassifiable)));
    }

    #[test]
    fn noise_chip_still_classifies() {
        let mut chip = GrayImage::filled(100, 100, 128);
        add_noise(&mut chip, 60.0, 4);
        assert!(classify_static(&chip, 50.0, &EyeCenterParams::default(), &ThresholdMethod::agbt()).is_ok());
    }

    #[test]
    fn calibration_examples() {
        use EyeLabel::*;
        let sep = [
            (Some(10.0), Open),
            (Some(15.0), Open),
            (Some(20.0), Open),
            (Some(36.0), Closed),
            (Some(40.0), Closed),
        ];
        assert_eq!(calibrate_static_threshold(&sep).unwrap(), (20.5, 1.0));
        assert_eq!(
            calibrate_static_threshold(&[(Some(10.0), Open), (Some(40.0), Closed)]).unwrap(),
            (10.5, 1.0)
        );
        let same = [(Some(30.0), Open), (Some(30.0), Open), (Some(30.0), Closed)];
        assert!((calibrate_static_threshold(&same).unwrap().1 - 2.0 / 3.0).abs() < 1e-12);
        assert!(calibrate_static_threshold(&[(Some(1.0), Open)]).is_err());
    }
}
