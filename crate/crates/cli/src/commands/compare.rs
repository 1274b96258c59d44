//! `compare-thresholds`: white-percentage gap of every binarization method.

use std::path::Path;

use drowsegate_core::eye_state::{extract_eye_window, face_chip_centers, WINDOW_HEIGHT, WINDOW_WIDTH};
use drowsegate_core::imgcore::io::read_gray_any;
use drowsegate_core::thresholding::mean_white;
use drowsegate_core::{Error, GrayImage, ThresholdMethod};
use rayon::prelude::*;

use super::{emit_report, list_images, ReportDefault};
use crate::error::CliResult;
use crate::report::RunReport;
use crate::settings::Settings;

#[derive(Clone, Debug, PartialEq)]
pub struct MethodGap {
    pub method: ThresholdMethod,
    pub open_w: f64,
    pub closed_w: f64,
    pub gap: f64,
}

/// Eye windows from a directory: 25x21 images are used as they are, any
/// other image is treated as a face chip and contributes the windows around
/// its tracked eyes.
pub fn load_windows(dir: &Path, settings: &Settings) -> CliResult<Vec<GrayImage>> {
    let files = list_images(dir)?;
    if files.is_empty() {
        return Err(Error::InvalidInput(format!("no PGM or PPM images in {}", dir.display())).into());
    }
    let per_file = files
        .par_iter()
        .map(|p| -> CliResult<Vec<GrayImage>> {
            let img = read_gray_any(p)?;
            if img.width() == WINDOW_WIDTH && img.height() == WINDOW_HEIGHT {
                return Ok(vec![img]);
            }
            let (chip, centers) = face_chip_centers(&img, &settings.eye_params())?;
            [centers.left, centers.right]
                .into_iter()
                .flatten()
                .map(|c| Ok(extract_eye_window(&chip, c.point)?.image))
                .collect()
        })
        .collect::<CliResult<Vec<_>>>()?;
    let windows: Vec<GrayImage> = per_file.into_iter().flatten().collect();
    if windows.is_empty() {
        return Err(Error::InvalidInput(format!("no eye could be tracked in any image of {}", dir.display())).into());
    }
    Ok(windows)
}

/// Default method set with the adaptive Gaussian parameters taken from the settings.
pub fn methods(settings: &Settings) -> CliResult<Vec<ThresholdMethod>> {
    let agbt = settings.threshold_method()?;
    Ok(ThresholdMethod::all_defaults()
        .into_iter()
        .map(|m| {
            if matches!(m, ThresholdMethod::AdaptiveGaussian { .. }) {
                agbt
            } else {
                m
            }
        })
        .collect())
}

/// Gaps sorted from largest to smallest; ties keep the method order.
pub fn method_gaps(open: &[GrayImage], closed: &[GrayImage], methods: &[ThresholdMethod]) -> CliResult<Vec<MethodGap>> {
    let mut rows = methods
        .par_iter()
        .map(|m| {
            let open_w = mean_white(open, m)?;
            let closed_w = mean_white(closed, m)?;
            Ok(MethodGap {
                method: *m,
                open_w,
                closed_w,
                gap: closed_w - open_w,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    rows.sort_by(|a, b| b.gap.total_cmp(&a.gap));
    Ok(rows)
}

pub fn compare_thresholds(settings: &Settings, open_dir: &Path, closed_dir: &Path) -> CliResult<()> {
    let open = load_windows(open_dir, settings)?;
    let closed = load_windows(closed_dir, settings)?;
    let rows = method_gaps(&open, &closed, &methods(settings)?)?;

    let mut report = RunReport::new("compare-thresholds", settings.describe());
    report.record(format!("open_windows={} closed_windows={}", open.len(), closed.len()));
    report.record(format!(
        "{:<18} {:>9} {:>9} {:>9}",
        "method", "open_w", "closed_w", "gap"
    ));
    for r in &rows {
        report.record(format!(
            "{:<18} {:>9.4} {:>9.4} {:>9.4}",
            r.method.name(),
            r.open_w,
            r.closed_w,
            r.gap
        ));
    }
    for r in &rows {
        report.record(format!(
            "method={} params=\"{}\" open_w={:.6} closed_w={:.6} gap={:.6}",
            r.method.name(),
            r.method,
            r.open_w,
            r.closed_w,
            r.gap
        ));
    }
    emit_report(&report, settings, ReportDefault::Stdout)
}
