//! Drowsiness detection from grayscale video.
//!
//! The pipeline runs face detection with a pretrained Haar cascade, locates
//! pupil centers with a gradient-intersection objective, binarizes a fixed
//! window around each eye with adaptive Gaussian thresholding, and feeds the
//! resulting white-pixel percentage into a double-threshold state machine
//! over a ring buffer of recent frames.

pub mod drowsiness;
pub mod error;
pub mod eye_center;
pub mod eye_state;
pub mod face_haar;
pub mod imgcore;
pub mod pipeline;
pub mod synth;
pub mod thresholding;

pub use drowsiness::{AlarmEvent, AlarmKind, DrowsinessConfig, DrowsinessMonitor};
pub use error::{Error, Result};
pub use eye_center::{EyeCenterParams, EyeCenters, EyeRegions};
pub use eye_state::{EyeLabel, FrameObservation};
pub use face_haar::{CascadeModel, DetectParams, Detection};
pub use imgcore::{BinaryImage, FloatImage, GrayImage, IntegralImage, Point, Rect, RgbImage};
pub use pipeline::{FrameAnalysis, FramePipeline, PipelineParams};
pub use thresholding::{ThresholdMethod, WhitePercentage};
