//! Per-frame composition: face detection, eye tracking on the normalized
//! face chip, and the white-percentage observation.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::Result;
use crate::eye_center::{eye_regions_from_face, track_eyes, EyeCenterParams, EyeCenters};
use crate::eye_state::{observe_frame, FrameObservation, FACE_SIZE};
use crate::face_haar::{detect_multiscale, primary_face, CascadeModel, DetectParams};
use crate::imgcore::{crop, draw_crosshair, draw_rect_outline, fill_top_row, resize_bilinear, GrayImage, Point, Rect};
use crate::thresholding::ThresholdMethod;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineParams {
    pub detect: DetectParams,
    pub eyes: EyeCenterParams,
    pub method: ThresholdMethod,
    /// Run the detector on every n-th frame and reuse the last face between.
    pub detect_every: usize,
    pub fps: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            detect: DetectParams {
                min_size: 100,
                ..Default::default()
            },
            eyes: EyeCenterParams::default(),
            method: ThresholdMethod::agbt(),
            detect_every: 1,
            fps: 30.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimes {
    pub face: Duration,
    pub eye_center: Duration,
    pub observe: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameAnalysis {
    pub frame_index: u64,
    pub face: Option<Rect>,
    pub face_reused: bool,
    /// Eye centers mapped back to frame coordinates.
    pub eyes: [Option<Point>; 2],
    /// `None` when no face was available.
    pub observation: Option<FrameObservation>,
    pub times: StageTimes,
}

pub struct FramePipeline {
    model: Arc<CascadeModel>,
    params: PipelineParams,
    last_face: Option<Rect>,
    since_detect: usize,
}

impl FramePipeline {
    pub fn new(model: Arc<CascadeModel>, params: PipelineParams) -> Result<Self> {
        params.method.validate()?;
        if params.detect_every == 0 {
            return Err(crate::error::invalid("detect-every must be at least 1"));
        }
        Ok(Self {
            model,
            params,
            last_face: None,
            since_detect: 0,
        })
    }

    pub fn params(&self) -> &PipelineParams {
        &self.params
    }

    pub fn analyze(&mut self, frame_index: u64, frame: &GrayImage) -> Result<FrameAnalysis> {
        let mut times = StageTimes::default();
        let t = Instant::now();
        let reuse = self.last_face.is_some() && self.since_detect < self.params.detect_every;
        let face = if reuse {
            self.since_detect += 1;
            self.last_face
        } else {
            let dets = detect_multiscale(&self.model, frame, &self.params.detect)?;
            self.since_detect = 1;
            self.last_face = primary_face(&dets);
            self.last_face
        };
        times.face = t.elapsed();
        let mut analysis = FrameAnalysis {
            frame_index,
            face,
            face_reused: reuse,
            eyes: [None, None],
            observation: None,
            times,
        };
        let Some(face) = face else {
            return Ok(analysis);
        };

        let t = Instant::now();
        let chip = resize_bilinear(&crop(frame, face)?, FACE_SIZE, FACE_SIZE)?;
        let regions = eye_regions_from_face(chip.bounds())?;
        let centers: EyeCenters = track_eyes(&chip, &regions, &self.params.eyes)?;
        analysis.times.eye_center = t.elapsed();

        let t = Instant::now();
        let obs = observe_frame(&chip, &centers, &self.params.method, frame_index, self.params.fps)?;
        analysis.times.observe = t.elapsed();

        let to_frame = |p: Point| {
            let sx = face.w as f64 / FACE_SIZE as f64;
            let sy = face.h as f64 / FACE_SIZE as f64;
            Point::new(
                (face.x + (p.x as f64 * sx).round() as usize).min(frame.width() - 1),
                (face.y + (p.y as f64 * sy).round() as usize).min(frame.height() - 1),
            )
        };
        analysis.eyes = [
            centers.left.map(|c| to_frame(c.point)),
            centers.right.map(|c| to_frame(c.point)),
        ];
        analysis.observation = Some(obs);
        Ok(analysis)
    }
}

/// Copy of `frame` with the face box, eye crosshairs and, while the alarm is
/// active, a white top row.
pub fn annotate(frame: &GrayImage, analysis: &FrameAnalysis, alarm_active: bool) -> GrayImage {
    let mut out = frame.clone();
    if let Some(face) = analysis.face {
        draw_rect_outline(&mut out, face, 255);
    }
    for p in analysis.eyes.iter().flatten() {
        draw_crosshair(&mut out, *p, 255);
    }
    if alarm_active {
        fill_top_row(&mut out, 255);
    }
    out
}
