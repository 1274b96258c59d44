//! `calibrate`: sweep the threshold coefficient over labeled sequences.
//!
//! A sequence named `clip` is a `clip.closures` sidecar (one inclusive
//! `start end` frame pair per line) plus its observations: `clip.obs` (one
//! white percentage per line, `none` for a frame without tracked eyes),
//! `clip.y4m`, or a frame directory `clip/`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use drowsegate_core::drowsiness::{calibrate_coefficient, LabeledSequence};
use drowsegate_core::FrameObservation;

use super::{build_pipeline, emit_report, ReportDefault};
use crate::error::{usage, CliError, CliResult};
use crate::report::RunReport;
use crate::settings::Settings;
use crate::source::FrameSource;

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a closure sidecar. Blank lines and `#` comments are skipped.
pub fn read_closures(path: &Path) -> CliResult<Vec<(u64, u64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [s, e] = fields[..] else {
            return Err(parse_error(
                path,
                i + 1,
                format!("expected \"start end\", got {line:?}"),
            ));
        };
        let parse = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| parse_error(path, i + 1, format!("not a frame index: {v:?}")))
        };
        let (s, e) = (parse(s)?, parse(e)?);
        if e < s {
            return Err(parse_error(
                path,
                i + 1,
                format!("closure ends at {e} before it starts at {s}"),
            ));
        }
        out.push((s, e));
    }
    Ok(out)
}

/// Reads an observation file: one value per non-comment line, frame index
/// implied by position.
pub fn read_observations(path: &Path, fps: f64) -> CliResult<Vec<FrameObservation>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let w = match line {
            "none" | "-" => None,
            v => Some(
                v.parse::<f64>()
                    .map_err(|_| parse_error(path, i + 1, format!("not a percentage: {v:?}")))?,
            ),
        };
        let obs = FrameObservation::from_combined(out.len() as u64, fps, w)
            .map_err(|e| parse_error(path, i + 1, e.to_string()))?;
        out.push(obs);
    }
    Ok(out)
}

pub fn write_observations(path: &Path, values: &[Option<f64>]) -> CliResult<()> {
    let mut text = String::new();
    for v in values {
        match v {
            Some(w) => writeln!(text, "{w}").unwrap(),
            None => text.push_str("none\n"),
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn video_observations(settings: &Settings, source: &Path) -> CliResult<Vec<FrameObservation>> {
    let (mut pipeline, _) = build_pipeline(settings)?;
    let mut source = FrameSource::open(source)?;
    let mut out = Vec::new();
    let mut index = 0u64;
    while let Some(frame) = source.next_frame()? {
        if let Some(obs) = pipeline.analyze(index, &frame)?.observation {
            out.push(obs);
        }
        index += 1;
    }
    Ok(out)
}

fn load_sequence(settings: &Settings, sidecar: &Path) -> CliResult<LabeledSequence> {
    let closures = read_closures(sidecar)?;
    let stem = sidecar.with_extension("");
    let obs_file = stem.with_extension("obs");
    let y4m = stem.with_extension("y4m");
    let observations = if obs_file.is_file() {
        read_observations(&obs_file, settings.fps)?
    } else if y4m.is_file() {
        video_observations(settings, &y4m)?
    } else if stem.is_dir() {
        video_observations(settings, &stem)?
    } else {
        return Err(usage(format!(
            "{}: no .obs, .y4m or frame directory next to it",
            sidecar.display()
        )));
    };
    Ok(LabeledSequence { observations, closures })
}

pub fn calibrate(settings: &Settings, dir: &Path) -> CliResult<()> {
    if !dir.is_dir() {
        return Err(usage(format!("{} is not a directory", dir.display())));
    }
    let mut sidecars: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    sidecars.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "closures"));
    sidecars.sort();
    if sidecars.is_empty() {
        return Err(usage(format!("no .closures files in {}", dir.display())));
    }
    let sequences = sidecars
        .iter()
        .map(|p| load_sequence(settings, p))
        .collect::<CliResult<Vec<_>>>()?;
    let result = calibrate_coefficient(&sequences, &settings.drowsiness()?)?;

    let mut report = RunReport::new("calibrate", settings.describe());
    report.record(format!("sequences={}", sequences.len()));
    report.record(format!(
        "closures={}",
        sequences.iter().map(|s| s.closures.len()).sum::<usize>()
    ));
    report.record(format!(
        "{:>6} {:>4} {:>4} {:>6} {:>8} {:>10} {:>9}",
        "C", "TP", "FP", "missed", "F1", "latency_s", "score"
    ));
    for r in &result.rows {
        report.record(format!(
            "{:>6.2} {:>4} {:>4} {:>6} {:>8.4} {:>10.4} {:>9.4}",
            r.coeff_c, r.true_positives, r.false_positives, r.missed, r.f1, r.mean_latency_s, r.score
        ));
    }
    report.record(format!("best_c={:.2}", result.best_c));
    emit_report(&report, settings, ReportDefault::Stdout)
}
