pub mod calibrate;
pub mod compare;
pub mod detect;
pub mod eval;
pub mod stream;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use drowsegate_core::{CascadeModel, DrowsinessMonitor, FramePipeline};

use crate::error::CliResult;
use crate::report::RunReport;
use crate::settings::Settings;

/// Where a report goes when `--report` is not set.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ReportDefault {
    Stdout,
    Stderr,
}

pub fn emit_report(report: &RunReport, settings: &Settings, fallback: ReportDefault) -> CliResult<()> {
    let text = report.render();
    match (&settings.report, fallback) {
        (Some(path), _) => std::fs::write(path, text)?,
        (None, ReportDefault::Stdout) => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        (None, ReportDefault::Stderr) => io::stderr().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn event_sink(settings: &Settings) -> CliResult<Box<dyn Write>> {
    Ok(match &settings.events {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout()),
    })
}

pub fn build_pipeline(settings: &Settings) -> CliResult<(FramePipeline, DrowsinessMonitor)> {
    let model = Arc::new(CascadeModel::from_file(settings.cascade_path()?)?);
    let pipeline = FramePipeline::new(model, settings.pipeline()?)?;
    let monitor = DrowsinessMonitor::new(settings.drowsiness()?)?;
    Ok((pipeline, monitor))
}

/// Sorted `*.pgm` and `*.ppm` files directly inside `dir`.
pub fn list_images(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("ppm"));
        if path.is_file() && is_image {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
