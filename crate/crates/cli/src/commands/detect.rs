//! `detect` and `bench`: run the full pipeline over a frame source.
//! `detect` also replays recorded `.obs` observation files.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use drowsegate_core::drowsiness::{match_events, AlarmKind};
use drowsegate_core::DrowsinessMonitor;

use super::calibrate::{read_closures, read_observations};
use super::stream::{process_stream, StreamSinks};
use super::{build_pipeline, emit_report, event_sink, ReportDefault};
use crate::error::{usage, CliError, CliResult};
use crate::report::{LatencyStats, RunReport};
use crate::settings::Settings;
use crate::source::FrameSource;

pub const BENCH_MIN_FRAMES: usize = 300;
pub const BENCH_MIN_WIDTH: usize = 640;
pub const BENCH_MIN_HEIGHT: usize = 480;

/// Feeds a recorded `.obs` stream straight into the state machine.
fn replay(settings: &Settings, source: &Path) -> CliResult<()> {
    let observations = read_observations(source, settings.fps)?;
    if observations.is_empty() {
        return Err(usage(format!("no frames in {}", source.display())));
    }
    let mut monitor = DrowsinessMonitor::new(settings.drowsiness()?)?;
    let mut events = event_sink(settings)?;
    let mut step_times = Vec::with_capacity(observations.len());
    let mut count = [0usize; 2];
    for obs in &observations {
        let t = Instant::now();
        let event = monitor.step(obs)?;
        step_times.push(t.elapsed());
        if let Some(e) = event {
            writeln!(events, "{e}")?;
            events.flush()?;
            count[usize::from(e.kind == AlarmKind::Cleared)] += 1;
        }
    }
    let mut report = RunReport::new("detect", settings.describe());
    report.record(format!("frames={}", observations.len()));
    report.record(format!("events={}", count[0] + count[1]));
    report.record(format!("raised={}", count[0]));
    report.stage("step", &LatencyStats::from_durations(&step_times));
    emit_report(&report, settings, ReportDefault::Stderr)
}

pub fn detect(settings: &Settings, source: &Path) -> CliResult<()> {
    if source.extension().is_some_and(|e| e == "obs") {
        return replay(settings, source);
    }
    let (mut pipeline, mut monitor) = build_pipeline(settings)?;
    let source = FrameSource::open(source)?;
    let mut events = event_sink(settings)?;
    let mut sinks = StreamSinks {
        events: &mut *events,
        annotate_dir: settings.annotate_dir.as_deref(),
        check_dims: &|_, _| Ok(()),
    };
    let outcome = process_stream(source, &mut pipeline, &mut monitor, &mut sinks)?;
    events.flush()?;

    let mut report = RunReport::new("detect", settings.describe());
    outcome.fill_report(&mut report);
    emit_report(&report, settings, ReportDefault::Stderr)?;
    match outcome.abort {
        Some(e) => Err(e),
        None if outcome.frames == 0 => Err(usage("no frames")),
        None => Ok(()),
    }
}

pub fn bench(settings: &Settings, source: &Path, closures: Option<&Path>) -> CliResult<()> {
    let closures = closures.map(read_closures).transpose()?;
    let (mut pipeline, mut monitor) = build_pipeline(settings)?;
    let source = FrameSource::open(source)?;
    if let Some(n) = source.len_hint() {
        if n < BENCH_MIN_FRAMES {
            return Err(usage(format!(
                "bench needs at least {BENCH_MIN_FRAMES} frames, source has {n}"
            )));
        }
    }
    let check = |w: usize, h: usize| {
        if w < BENCH_MIN_WIDTH || h < BENCH_MIN_HEIGHT {
            Err(usage(format!(
                "bench needs frames of at least {BENCH_MIN_WIDTH}x{BENCH_MIN_HEIGHT}, got {w}x{h}"
            )))
        } else {
            Ok(())
        }
    };
    let mut events: Box<dyn std::io::Write> = match settings.events {
        Some(_) => event_sink(settings)?,
        None => Box::new(std::io::sink()),
    };
    let mut sinks = StreamSinks {
        events: &mut *events,
        annotate_dir: settings.annotate_dir.as_deref(),
        check_dims: &check,
    };
    let outcome = process_stream(source, &mut pipeline, &mut monitor, &mut sinks)?;
    events.flush()?;
    if outcome.abort.is_none() && outcome.frames < BENCH_MIN_FRAMES {
        return Err(usage(format!(
            "bench needs at least {BENCH_MIN_FRAMES} frames, source had {}",
            outcome.frames
        )));
    }

    let mut report = RunReport::new("bench", settings.describe());
    outcome.fill_report(&mut report);
    let wall_s = outcome.wall.as_secs_f64();
    let frames = outcome.frames.max(1) as f64;
    let mean_frame_ms = wall_s * 1e3 / frames;
    let fps = if wall_s > 0.0 {
        outcome.frames as f64 / wall_s
    } else {
        0.0
    };
    report.record(format!("wall_s={wall_s:.3}"));
    report.record(format!("mean_frame_ms={mean_frame_ms:.3}"));
    report.record(format!("fps={fps:.2}"));
    report.record(format!("budget_ms={}", settings.budget_ms));

    if let Some(closures) = &closures {
        let raised = outcome.raised_frames();
        let (_, false_positives, latency) = match_events(&raised, closures);
        let mut detected = Vec::new();
        for (&(s, e), lat) in closures.iter().zip(&latency) {
            match lat {
                Some(frames) => {
                    let secs = *frames as f64 / settings.fps;
                    detected.push(secs);
                    report.record(format!("closure start={s} end={e} latency_s={secs:.6}"));
                }
                None => report.record(format!("closure start={s} end={e} missed")),
            }
        }
        report.record(format!("false_alarms={false_positives}"));
        if !detected.is_empty() {
            let mean = detected.iter().sum::<f64>() / detected.len() as f64;
            report.record(format!("mean_latency_s={mean:.6}"));
        }
    }
    emit_report(&report, settings, ReportDefault::Stdout)?;
    if let Some(e) = outcome.abort {
        return Err(e);
    }
    if mean_frame_ms > settings.budget_ms {
        return Err(CliError::Budget {
            mean_ms: mean_frame_ms,
            budget_ms: settings.budget_ms,
        });
    }
    Ok(())
}
