//! Effective configuration: built-in defaults, then an optional `key=value`
//! config file, then command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use drowsegate_core::drowsiness::{AbsentPolicy, AverageMode, DrowsinessConfig};
use drowsegate_core::eye_center::{EyeCenterParams, WeightPolarity};
use drowsegate_core::face_haar::DetectParams;
use drowsegate_core::pipeline::PipelineParams;
use drowsegate_core::ThresholdMethod;

use crate::error::{usage, CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub cascade: Option<PathBuf>,
    pub fps: f64,
    pub window_frames: usize,
    pub fth: usize,
    pub coeff_c: f64,
    pub gap_d: f64,
    pub avg_mode: AverageMode,
    pub absent_policy: AbsentPolicy,
    pub freeze_pth: bool,
    pub max_candidate_frames: Option<usize>,
    pub weight_polarity: WeightPolarity,
    pub eye_max_width: Option<usize>,
    pub detect_every: usize,
    pub min_face: usize,
    pub scale_factor: f64,
    pub min_neighbors: usize,
    pub group_eps: f64,
    pub agbt_block: usize,
    pub agbt_c: f64,
    pub annotate_dir: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub budget_ms: f64,
    pub tau: Option<f64>,
    pub calibrate_split: f64,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        let d = DrowsinessConfig::default();
        Self {
            cascade: None,
            fps: d.fps,
            window_frames: d.window_frames,
            fth: d.fth_frames,
            coeff_c: d.coeff_c,
            gap_d: d.gap_d,
            avg_mode: d.average_mode,
            absent_policy: d.absent_policy,
            freeze_pth: d.freeze_pth_during_candidate,
            max_candidate_frames: d.max_candidate_frames,
            weight_polarity: WeightPolarity::Inverted,
            eye_max_width: EyeCenterParams::default().max_width,
            detect_every: 1,
            min_face: 100,
            scale_factor: 1.1,
            min_neighbors: 3,
            group_eps: 0.2,
            agbt_block: 11,
            agbt_c: 2.0,
            annotate_dir: None,
            events: None,
            report: None,
            budget_ms: 33.0,
            tau: None,
            calibrate_split: 0.5,
            seed: 0,
        }
    }
}

/// Every key accepted in a config file, in the order they are echoed.
pub const KEYS: &[&str] = &[
    "cascade",
    "fps",
    "window-frames",
    "fth",
    "coeff-c",
    "gap-d",
    "avg-mode",
    "absent-policy",
    "freeze-pth",
    "max-candidate-frames",
    "weight-polarity",
    "eye-max-width",
    "detect-every",
    "min-face",
    "scale-factor",
    "min-neighbors",
    "group-eps",
    "agbt-block",
    "agbt-c",
    "annotate-dir",
    "events",
    "report",
    "budget-ms",
    "tau",
    "calibrate-split",
    "seed",
];

/// One-line help for a key, shown by `--help`.
pub fn help(key: &str) -> &'static str {
    match key {
        "cascade" => "Haar cascade XML (old <stages>/<trees> layout)",
        "fps" => "frame rate used for timestamps and latencies",
        "window-frames" => "ring buffer length in frames",
        "fth" => "consecutive closed frames before the alarm is raised",
        "coeff-c" => "closure threshold coefficient in [0, 1]",
        "gap-d" => "open/closed white-percentage gap",
        "avg-mode" => "moving average divisor: literal or normalized",
        "absent-policy" => "frames without a tracked eye: treat_as_closed or hold_last",
        "freeze-pth" => "hold the threshold fixed while a closure candidate runs",
        "max-candidate-frames" => "release a frozen threshold after this many frames (none to never)",
        "weight-polarity" => "eye-center weighting: inverted, literal or uniform",
        "eye-max-width" => "downscale eye regions wider than this (none to disable)",
        "detect-every" => "run face detection on every n-th frame",
        "min-face" => "smallest face side searched, in pixels",
        "scale-factor" => "detector scale step",
        "min-neighbors" => "raw hits required to keep a face",
        "group-eps" => "hit grouping tolerance",
        "agbt-block" => "adaptive Gaussian threshold block size (odd)",
        "agbt-c" => "adaptive Gaussian threshold offset",
        "annotate-dir" => "write annotated PGM frames here",
        "events" => "event log path (default: stdout)",
        "report" => "report path (default: stderr for detect, stdout otherwise)",
        "budget-ms" => "bench: maximum mean frame time",
        "tau" => "eval-eyes: fixed white-percentage threshold",
        "calibrate-split" => "eval-eyes: fraction of each class used to fit the threshold",
        "seed" => "seed for the calibration split",
        _ => "",
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn optional_count(key: &str, value: &str) -> Result<Option<usize>, String> {
    match value {
        "none" | "off" | "0" => Ok(None),
        v => num(key, v).map(Some),
    }
}

fn flag(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {value:?}")),
    }
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

fn show_path(v: &Option<PathBuf>) -> String {
    v.as_ref()
        .map_or_else(|| "none".to_string(), |p| p.display().to_string())
}

impl Settings {
    /// Applies one `key=value` pair. Keys use the flag spelling; underscores
    /// are accepted in place of dashes.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "cascade" => self.cascade = Some(PathBuf::from(value)),
            "fps" => self.fps = num(k, value)?,
            "window-frames" => self.window_frames = num(k, value)?,
            "fth" => self.fth = num(k, value)?,
            "coeff-c" => self.coeff_c = num(k, value)?,
            "gap-d" => self.gap_d = num(k, value)?,
            "avg-mode" => self.avg_mode = value.parse().map_err(|e| format!("{e}"))?,
            "absent-policy" => self.absent_policy = value.parse().map_err(|e| format!("{e}"))?,
            "freeze-pth" => self.freeze_pth = flag(k, value)?,
            "max-candidate-frames" => self.max_candidate_frames = optional_count(k, value)?,
            "weight-polarity" => self.weight_polarity = value.parse().map_err(|e| format!("{e}"))?,
            "eye-max-width" => self.eye_max_width = optional_count(k, value)?,
            "detect-every" => self.detect_every = num(k, value)?,
            "min-face" => self.min_face = num(k, value)?,
            "scale-factor" => self.scale_factor = num(k, value)?,
            "min-neighbors" => self.min_neighbors = num(k, value)?,
            "group-eps" => self.group_eps = num(k, value)?,
            "agbt-block" => self.agbt_block = num(k, value)?,
            "agbt-c" => self.agbt_c = num(k, value)?,
            "annotate-dir" => self.annotate_dir = Some(PathBuf::from(value)),
            "events" => self.events = Some(PathBuf::from(value)),
            "report" => self.report = Some(PathBuf::from(value)),
            "budget-ms" => self.budget_ms = num(k, value)?,
            "tau" => self.tau = Some(num(k, value)?),
            "calibrate-split" => self.calibrate_split = num(k, value)?,
            "seed" => self.seed = num(k, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)?;
        let err = |line: usize, message: String| CliError::Parse {
            path: path.display().to_string(),
            line,
            message,
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(i + 1, format!("expected key=value, got {line:?}")))?;
            self.apply(key, value).map_err(|m| err(i + 1, m))?;
        }
        Ok(())
    }

    /// `key=value` lines in `KEYS` order.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = match *key {
                "cascade" => show_path(&self.cascade),
                "fps" => self.fps.to_string(),
                "window-frames" => self.window_frames.to_string(),
                "fth" => self.fth.to_string(),
                "coeff-c" => self.coeff_c.to_string(),
                "gap-d" => self.gap_d.to_string(),
                "avg-mode" => format!("{:?}", self.avg_mode).to_lowercase(),
                "absent-policy" => match self.absent_policy {
                    AbsentPolicy::TreatAsClosed => "treat_as_closed".into(),
                    AbsentPolicy::HoldLast => "hold_last".into(),
                },
                "freeze-pth" => self.freeze_pth.to_string(),
                "max-candidate-frames" => show_opt(&self.max_candidate_frames),
                "weight-polarity" => format!("{:?}", self.weight_polarity).to_lowercase(),
                "eye-max-width" => show_opt(&self.eye_max_width),
                "detect-every" => self.detect_every.to_string(),
                "min-face" => self.min_face.to_string(),
                "scale-factor" => self.scale_factor.to_string(),
                "min-neighbors" => self.min_neighbors.to_string(),
                "group-eps" => self.group_eps.to_string(),
                "agbt-block" => self.agbt_block.to_string(),
                "agbt-c" => self.agbt_c.to_string(),
                "annotate-dir" => show_path(&self.annotate_dir),
                "events" => show_path(&self.events),
                "report" => show_path(&self.report),
                "budget-ms" => self.budget_ms.to_string(),
                "tau" => show_opt(&self.tau),
                "calibrate-split" => self.calibrate_split.to_string(),
                "seed" => self.seed.to_string(),
                _ => unreachable!("every key is described"),
            };
            let _ = writeln!(out, "{key}={value}");
        }
        out
    }

    pub fn drowsiness(&self) -> CliResult<DrowsinessConfig> {
        let base = DrowsinessConfig::default();
        let cfg = DrowsinessConfig {
            fps: self.fps,
            window_frames: self.window_frames,
            gap_d: self.gap_d,
            coeff_c: self.coeff_c,
            fth_frames: self.fth,
            average_mode: self.avg_mode,
            freeze_pth_during_candidate: self.freeze_pth,
            absent_policy: self.absent_policy,
            max_candidate_frames: self.max_candidate_frames,
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn threshold_method(&self) -> CliResult<ThresholdMethod> {
        let m = ThresholdMethod::agbt_with(self.agbt_block, self.agbt_c);
        m.validate()?;
        Ok(m)
    }

    pub fn eye_params(&self) -> EyeCenterParams {
        EyeCenterParams {
            polarity: self.weight_polarity,
            max_width: self.eye_max_width,
            ..Default::default()
        }
    }

    pub fn pipeline(&self) -> CliResult<PipelineParams> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(usage(format!("fps must be positive, got {}", self.fps)));
        }
        if self.detect_every == 0 {
            return Err(usage("detect-every must be at least 1"));
        }
        Ok(PipelineParams {
            detect: DetectParams {
                scale_factor: self.scale_factor,
                min_neighbors: self.min_neighbors,
                min_size: self.min_face,
                max_size: None,
                group_eps: self.group_eps,
            },
            eyes: self.eye_params(),
            method: self.threshold_method()?,
            detect_every: self.detect_every,
            fps: self.fps,
        })
    }

    pub fn cascade_path(&self) -> CliResult<&Path> {
        let path = self
            .cascade
            .as_deref()
            .ok_or_else(|| usage("--cascade is required for this command"))?;
        if !path.is_file() {
            return Err(usage(format!("cascade file {} does not exist", path.display())));
        }
        Ok(path)
    }
}
