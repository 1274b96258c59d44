//! Face localization with a pretrained Haar cascade: file parsing,
//! variance-normalized window evaluation over integral images, a multiscale
//! sliding-window scan, and overlap grouping of the raw hits.

mod cascade;
mod detect;

pub use cascade::{parse_cascade, CascadeModel, CascadeStage, HaarFeature, WeakClassifier, WeightedRect};
pub use detect::{
    detect_multiscale, evaluate_window, group_rectangles, primary_face, scan_windows, DetectParams, Detection,
    ScaledCascade,
};
