//! The per-frame loop shared by `detect` and `bench`.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use drowsegate_core::drowsiness::AlarmKind;
use drowsegate_core::imgcore::io::write_pgm;
use drowsegate_core::pipeline::annotate;
use drowsegate_core::{AlarmEvent, DrowsinessMonitor, FramePipeline};

use crate::error::{CliError, CliResult};
use crate::report::{LatencyStats, RunReport};
use crate::source::{FrameSource, Prefetch};

pub const STAGES: [&str; 5] = ["decode", "face", "eye-center", "observe", "step"];

#[derive(Default)]
pub struct StreamOutcome {
    pub frames: usize,
    pub dims: Option<(usize, usize)>,
    pub events: Vec<AlarmEvent>,
    pub warnings: usize,
    pub no_face_frames: usize,
    /// Samples per entry of `STAGES`.
    pub stage_times: [Vec<Duration>; 5],
    pub wall: Duration,
    pub abort: Option<CliError>,
}

impl StreamOutcome {
    pub fn raised_frames(&self) -> Vec<u64> {
        self.events
            .iter()
            .filter(|e| e.kind == AlarmKind::Raised)
            .map(|e| e.frame_index)
            .collect()
    }

    pub fn fill_report(&self, report: &mut RunReport) {
        report.record(format!("frames={}", self.frames));
        if let Some((w, h)) = self.dims {
            report.record(format!("frame_size={w}x{h}"));
        }
        report.record(format!("events={}", self.events.len()));
        report.record(format!(
            "raised={}",
            self.events.iter().filter(|e| e.kind == AlarmKind::Raised).count()
        ));
        report.record(format!("no_face_frames={}", self.no_face_frames));
        report.record(format!("warnings={}", self.warnings));
        for (name, samples) in STAGES.iter().zip(&self.stage_times) {
            report.stage(name, &LatencyStats::from_durations(samples));
        }
        if let Some(e) = &self.abort {
            report.record(format!("aborted={e}"));
        }
    }
}

pub struct StreamSinks<'a> {
    pub events: &'a mut dyn Write,
    pub annotate_dir: Option<&'a Path>,
    /// Called with the first frame's dimensions; an error stops the run.
    pub check_dims: &'a dyn Fn(usize, usize) -> CliResult<()>,
}

/// Decodes one frame ahead and processes frames strictly in order. Every
/// event line is flushed before the next frame is taken from the decoder.
/// Frame and pipeline failures end the run and are returned in `abort`;
/// failures writing the log are returned as errors.
pub fn process_stream(
    source: FrameSource,
    pipeline: &mut FramePipeline,
    monitor: &mut DrowsinessMonitor,
    sinks: &mut StreamSinks<'_>,
) -> CliResult<StreamOutcome> {
    let fps = pipeline.params().fps;
    let mut out = StreamOutcome::default();
    let mut no_face_streak = 0usize;
    if let Some(dir) = sinks.annotate_dir {
        std::fs::create_dir_all(dir)?;
    }
    let start = Instant::now();
    let mut prefetch = Prefetch::spawn(source);
    while let Some(item) = prefetch.recv() {
        let decoded = match item {
            Ok(d) => d,
            Err(e) => {
                out.abort = Some(e.into());
                break;
            }
        };
        let index = out.frames as u64;
        let frame = decoded.frame;
        if out.dims.is_none() {
            (sinks.check_dims)(frame.width(), frame.height())?;
            out.dims = Some((frame.width(), frame.height()));
        }
        out.stage_times[0].push(decoded.decode);

        let analysis = match pipeline.analyze(index, &frame) {
            Ok(a) => a,
            Err(e) => {
                out.abort = Some(e.into());
                break;
            }
        };
        out.stage_times[1].push(analysis.times.face);
        out.stage_times[2].push(analysis.times.eye_center);
        out.stage_times[3].push(analysis.times.observe);

        let t = Instant::now();
        let event = match &analysis.observation {
            Some(obs) => {
                no_face_streak = 0;
                match monitor.step(obs) {
                    Ok(e) => e,
                    Err(e) => {
                        out.abort = Some(e.into());
                        break;
                    }
                }
            }
            None => {
                no_face_streak += 1;
                out.no_face_frames += 1;
                None
            }
        };
        out.stage_times[4].push(t.elapsed());

        if let Some(e) = event {
            writeln!(sinks.events, "{e}")?;
            sinks.events.flush()?;
            out.events.push(e);
        }
        if no_face_streak as f64 > fps {
            writeln!(
                sinks.events,
                "warning frame_index={index} timestamp_s={:.6} no_face_frames={no_face_streak}",
                index as f64 / fps
            )?;
            sinks.events.flush()?;
            out.warnings += 1;
        }
        if let Some(dir) = sinks.annotate_dir {
            let marked = annotate(&frame, &analysis, monitor.state().alarm_active);
            if let Err(e) = write_pgm(dir.join(format!("frame_{index:06}.pgm")), &marked) {
                out.abort = Some(e.into());
                break;
            }
        }
        out.frames += 1;
    }
    out.wall = start.elapsed();
    Ok(out)
}
