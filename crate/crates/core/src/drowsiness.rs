//! Temporal drowsiness decision over per-frame white percentages.
//!
//! A ring buffer holds the last `window_frames` observations. Their
//! interval-weighted moving average `a10` is the adaptive baseline and
//! `pth = a10 + C * gap` the closure threshold. A frame with `w >= pth`
//! extends the current closure candidate; `fth_frames` consecutive such
//! frames raise the alarm, and the first frame below `pth` clears it.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::eye_state::FrameObservation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AverageMode {
    /// Divide the weighted sum by `window_frames`, as the formula is printed.
    Literal,
    /// Divide by the sum of the weights actually applied.
    #[default]
    Normalized,
}

impl FromStr for AverageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Self::Literal),
            "normalized" => Ok(Self::Normalized),
            _ => Err(invalid(format!(
                "unknown average mode {s:?} (expected literal or normalized)"
            ))),
        }
    }
}

/// What a frame without any tracked eye contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AbsentPolicy {
    /// Counts as fully white (100%).
    #[default]
    TreatAsClosed,
    /// Repeats the previous value.
    HoldLast,
}

impl FromStr for AbsentPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "treat_as_closed" => Ok(Self::TreatAsClosed),
            "hold_last" => Ok(Self::HoldLast),
            _ => Err(invalid(format!(
                "unknown absent policy {s:?} (expected treat_as_closed or hold_last)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrowsinessConfig {
    pub fps: f64,
    pub window_frames: usize,
    pub intervals: usize,
    /// One weight per interval, oldest first.
    pub interval_weights: Vec<f64>,
    pub gap_d: f64,
    pub coeff_c: f64,
    pub fth_frames: usize,
    pub average_mode: AverageMode,
    pub freeze_pth_during_candidate: bool,
    pub absent_policy: AbsentPolicy,
    /// A frozen threshold is released once a candidate has lasted this many
    /// frames, so a sustained level shift is absorbed into the baseline.
    /// `None` keeps it frozen for the whole candidate.
    pub max_candidate_frames: Option<usize>,
}

impl Default for DrowsinessConfig {
    fn default() -> Self {
        Self {
            fps: 30.0,
            window_frames: 300,
            intervals: 5,
            interval_weights: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            gap_d: 15.0,
            coeff_c: 0.72,
            fth_frames: 24,
            average_mode: AverageMode::Normalized,
            freeze_pth_during_candidate: true,
            absent_policy: AbsentPolicy::TreatAsClosed,
            max_candidate_frames: Some(300),
        }
    }
}

impl DrowsinessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(invalid(format!("fps must be positive, got {}", self.fps)));
        }
        if self.intervals == 0 || self.window_frames == 0 || !self.window_frames.is_multiple_of(self.intervals) {
            return Err(invalid(format!(
                "window of {} frames must split into {} equal intervals",
                self.window_frames, self.intervals
            )));
        }
        if self.interval_weights.len() != self.intervals {
            return Err(invalid(format!(
                "{} interval weights given for {} intervals",
                self.interval_weights.len(),
                self.intervals
            )));
        }
        if self.interval_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.interval_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(invalid("interval weights must be non-negative with a positive sum"));
        }
        if !(0.0..=1.0).contains(&self.coeff_c) {
            return Err(invalid(format!(
                "coefficient C must lie in [0, 1], got {}",
                self.coeff_c
            )));
        }
        if !(self.gap_d > 0.0 && self.gap_d.is_finite()) {
            return Err(invalid(format!("gap must be positive, got {}", self.gap_d)));
        }
        if self.fth_frames == 0 {
            return Err(invalid("frame threshold must be at least 1"));
        }
        if self.max_candidate_frames == Some(0) {
            return Err(invalid("candidate limit must be at least 1 frame"));
        }
        Ok(())
    }
}

/// Fixed-capacity FIFO that overwrites its oldest entry when full.
#[derive(Clone, Debug, PartialEq)]
pub struct RingBuffer {
    data: Vec<f64>,
    head: usize,
    len: usize,
}

impl RingBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring buffer capacity must be positive");
        Self {
            data: vec![0.0; capacity],
            head: 0,
            len: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == self.data.len()
    }

    pub fn push(&mut self, v: f64) {
        let cap = self.data.len();
        let slot = (self.head + self.len) % cap;
        self.data[slot] = v;
        if self.len < cap {
            self.len += 1;
        } else {
            self.head = (self.head + 1) % cap;
        }
    }

    /// Values from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        let cap = self.data.len();
        (0..self.len).map(move |i| self.data[(self.head + i) % cap])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }
}

/// Interval-weighted average of the buffered values. With `n` values held,
/// value `j` (oldest = 0) falls in interval `floor(j * intervals / n)`.
pub fn weighted_moving_average(buffer: &RingBuffer, cfg: &DrowsinessConfig) -> Result<f64> {
    let n = buffer.len();
    if n == 0 {
        return Err(invalid("moving average of an empty buffer"));
    }
    let k = cfg.intervals;
    let weight = |j: usize| cfg.interval_weights[j * k / n];
    Ok(match cfg.average_mode {
        AverageMode::Literal => {
            buffer.iter().enumerate().map(|(j, v)| weight(j) * v).sum::<f64>() / cfg.window_frames as f64
        }
        AverageMode::Normalized => {
            // Averaging deviations from one buffered value makes a constant
            // stream come out exactly.
            let base = buffer.iter().next().expect("non-empty");
            let (mut dev, mut weight_sum) = (0.0, 0.0);
            for (j, v) in buffer.iter().enumerate() {
                dev += weight(j) * (v - base);
                weight_sum += weight(j);
            }
            base + dev / weight_sum
        }
    })
}

pub fn percentage_threshold(a10: f64, cfg: &DrowsinessConfig) -> f64 {
    (a10 + cfg.coeff_c * cfg.gap_d).clamp(0.0, 100.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlarmKind {
    Raised,
    Cleared,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlarmEvent {
    pub kind: AlarmKind,
    pub frame_index: u64,
    pub timestamp: f64,
    pub a10: f64,
    pub pth: f64,
    pub w: f64,
}

impl fmt::Display for AlarmEvent {
    /// One event-log line, without the trailing newline.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            AlarmKind::Raised => "raised",
            AlarmKind::Cleared => "cleared",
        };
        write!(
            f,
            "kind={kind} frame_index={} timestamp_s={:.6} a10={:.6} pth={:.6} w={:.6}",
            self.frame_index, self.timestamp, self.a10, self.pth, self.w
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrowsinessState {
    pub buffer: RingBuffer,
    pub a10: f64,
    pub pth: f64,
    pub counter_k: usize,
    pub alarm_active: bool,
    pub frames_seen: u64,
    last_w: Option<f64>,
    last_index: Option<u64>,
}

impl DrowsinessState {
    fn new(cfg: &DrowsinessConfig) -> Self {
        Self {
            buffer: RingBuffer::new(cfg.window_frames),
            a10: 0.0,
            pth: percentage_threshold(0.0, cfg),
            counter_k: 0,
            alarm_active: false,
            frames_seen: 0,
            last_w: None,
            last_index: None,
        }
    }
}

/// Single-owner state machine; feed observations in frame order.
#[derive(Clone, Debug)]
pub struct DrowsinessMonitor {
    cfg: DrowsinessConfig,
    state: DrowsinessState,
}

impl DrowsinessMonitor {
    pub fn new(cfg: DrowsinessConfig) -> Result<Self> {
        cfg.validate()?;
        let state = DrowsinessState::new(&cfg);
        Ok(Self { cfg, state })
    }

    pub fn config(&self) -> &DrowsinessConfig {
        &self.cfg
    }

    pub fn state(&self) -> &DrowsinessState {
        &self.state
    }

    pub fn step(&mut self, obs: &FrameObservation) -> Result<Option<AlarmEvent>> {
        let cfg = &self.cfg;
        let st = &mut self.state;
        if let Some(last) = st.last_index {
            if obs.frame_index <= last {
                return Err(Error::OrderingViolation {
                    last,
                    got: obs.frame_index,
                });
            }
        }
        let w = match (obs.w_combined, cfg.absent_policy) {
            (Some(w), _) => w.value(),
            (None, AbsentPolicy::TreatAsClosed) => 100.0,
            (None, AbsentPolicy::HoldLast) => st.last_w.unwrap_or(100.0),
        };
        let testing = st.frames_seen >= cfg.window_frames as u64;
        st.buffer.push(w);
        st.frames_seen += 1;
        st.last_w = Some(w);
        st.last_index = Some(obs.frame_index);

        let released = cfg.max_candidate_frames.is_some_and(|m| st.counter_k >= m);
        if st.counter_k == 0 || !cfg.freeze_pth_during_candidate || released {
            st.a10 = weighted_moving_average(&st.buffer, cfg)?;
            st.pth = percentage_threshold(st.a10, cfg);
        }
        if !testing {
            return Ok(None);
        }
        let event = |kind| AlarmEvent {
            kind,
            frame_index: obs.frame_index,
            timestamp: obs.timestamp,
            a10: st.a10,
            pth: st.pth,
            w,
        };
        if w >= st.pth {
            st.counter_k += 1;
            if st.counter_k == cfg.fth_frames && !st.alarm_active {
                st.alarm_active = true;
                return Ok(Some(event(AlarmKind::Raised)));
            }
            Ok(None)
        } else {
            st.counter_k = 0;
            if st.alarm_active {
                st.alarm_active = false;
                return Ok(Some(event(AlarmKind::Cleared)));
            }
            Ok(None)
        }
    }
}

/// Runs a whole stream through a fresh monitor.
pub fn run_stream(observations: &[FrameObservation], cfg: &DrowsinessConfig) -> Result<Vec<AlarmEvent>> {
    let mut monitor = DrowsinessMonitor::new(cfg.clone())?;
    let mut events = Vec::new();
    for obs in observations {
        events.extend(monitor.step(obs)?);
    }
    Ok(events)
}

/// Observations from bare white percentages, indexed from zero.
pub fn observations_from_values(values: &[Option<f64>], fps: f64) -> Result<Vec<FrameObservation>> {
    values
        .iter()
        .enumerate()
        .map(|(i, w)| FrameObservation::from_combined(i as u64, fps, *w))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSequence {
    pub observations: Vec<FrameObservation>,
    /// Inclusive frame ranges of true eye closures.
    pub closures: Vec<(u64, u64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationRow {
    pub coeff_c: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub missed: usize,
    pub f1: f64,
    pub mean_latency_s: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    pub best_c: f64,
    pub rows: Vec<CalibrationRow>,
}

pub const LATENCY_PENALTY: f64 = 0.1;

/// Candidate coefficients 0.00, 0.02, ..., 1.00.
pub fn coefficient_grid() -> Vec<f64> {
    (0..=50).map(|i| i as f64 / 50.0).collect()
}

/// Matches raised alarms to closures: an alarm inside `[start, end]` of a
/// not yet matched closure detects it; any other alarm is a false positive.
/// Returns (true positives, false positives, per-closure latency in frames).
pub fn match_events(raised: &[u64], closures: &[(u64, u64)]) -> (usize, usize, Vec<Option<u64>>) {
    let mut latency = vec![None; closures.len()];
    let mut fp = 0;
    for &f in raised {
        match closures
            .iter()
            .enumerate()
            .find(|(i, &(s, e))| s <= f && f <= e && latency[*i].is_none())
        {
            Some((i, &(s, _))) => latency[i] = Some(f - s),
            None => fp += 1,
        }
    }
    let tp = latency.iter().filter(|l| l.is_some()).count();
    (tp, fp, latency)
}

fn score_coefficient(sequences: &[LabeledSequence], cfg: &DrowsinessConfig) -> Result<CalibrationRow> {
    let (mut tp, mut fp, mut missed) = (0, 0, 0);
    let mut latency_total = 0.0;
    let mut closures = 0usize;
    let ceiling = cfg.window_frames as f64 / cfg.fps;
    for seq in sequences {
        let raised: Vec<u64> = run_stream(&seq.observations, cfg)?
            .into_iter()
            .filter(|e| e.kind == AlarmKind::Raised)
            .map(|e| e.frame_index)
            .collect();
        let (t, f, lat) = match_events(&raised, &seq.closures);
        tp += t;
        fp += f;
        missed += seq.closures.len() - t;
        closures += seq.closures.len();
        latency_total += lat
            .iter()
            .map(|l| l.map_or(ceiling, |frames| frames as f64 / cfg.fps))
            .sum::<f64>();
    }
    let f1 = if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + missed) as f64
    };
    let mean_latency_s = latency_total / closures.max(1) as f64;
    Ok(CalibrationRow {
        coeff_c: cfg.coeff_c,
        true_positives: tp,
        false_positives: fp,
        missed,
        f1,
        mean_latency_s,
        score: f1 - LATENCY_PENALTY * mean_latency_s,
    })
}

/// Sweeps the coefficient grid; the best score wins, the smallest C on ties.
pub fn calibrate_coefficient(sequences: &[LabeledSequence], base: &DrowsinessConfig) -> Result<CalibrationReport> {
    base.validate()?;
    let fth = base.fth_frames as u64;
    if !sequences
        .iter()
        .flat_map(|s| &s.closures)
        .any(|&(s, e)| e >= s && e - s + 1 >= fth)
    {
        return Err(invalid(format!(
            "calibration needs at least one labeled closure of {fth} or more frames"
        )));
    }
    let rows = coefficient_grid()
        .into_par_iter()
        .map(|c| {
            score_coefficient(
                sequences,
                &DrowsinessConfig {
                    coeff_c: c,
                    ..base.clone()
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .fold(&rows[0], |best, r| if r.score > best.score { r } else { best });
    Ok(CalibrationReport {
        best_c: best.coeff_c,
        rows,
    })
}
