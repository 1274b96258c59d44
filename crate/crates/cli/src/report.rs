//! Run reports: a commented config header followed by `key=value` records.

use std::fmt::Write as _;
use std::time::Duration;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyStats {
    pub min_ms: f64,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub count: usize,
}

impl LatencyStats {
    /// Nearest-rank percentile; all zeros for an empty sample.
    pub fn from_durations(samples: &[Duration]) -> Self {
        let mut ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        if ms.is_empty() {
            return Self {
                min_ms: 0.0,
                mean_ms: 0.0,
                p95_ms: 0.0,
                max_ms: 0.0,
                count: 0,
            };
        }
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Self {
            min_ms: ms[0],
            mean_ms: ms.iter().sum::<f64>() / n as f64,
            p95_ms: ms[rank - 1],
            max_ms: ms[n - 1],
            count: n,
        }
    }
}

/// Rows are true classes (open, closed); columns are predicted open,
/// predicted closed and unclassifiable, so every row sums to its class total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub rows: [[usize; 3]; 2],
}

impl Confusion {
    pub fn total(&self, class: usize) -> usize {
        self.rows[class].iter().sum()
    }

    pub fn correct(&self) -> usize {
        self.rows[0][0] + self.rows[1][1]
    }

    pub fn unclassifiable(&self) -> usize {
        self.rows[0][2] + self.rows[1][2]
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.total(0) + self.total(1);
        if n == 0 {
            0.0
        } else {
            self.correct() as f64 / n as f64
        }
    }

    pub fn recall(&self, class: usize) -> f64 {
        let n = self.total(class);
        if n == 0 {
            0.0
        } else {
            self.rows[class][class] as f64 / n as f64
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub command: String,
    pub config: String,
    records: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, config: String) -> Self {
        Self {
            command: command.to_string(),
            config,
            records: Vec::new(),
        }
    }

    pub fn record(&mut self, line: impl Into<String>) {
        self.records.push(line.into());
    }

    pub fn stage(&mut self, name: &str, s: &LatencyStats) {
        self.record(format!(
            "stage={name} count={} min_ms={:.3} mean_ms={:.3} p95_ms={:.3} max_ms={:.3}",
            s.count, s.min_ms, s.mean_ms, s.p95_ms, s.max_ms
        ));
    }

    pub fn confusion(&mut self, c: &Confusion) {
        for (i, class) in ["open", "closed"].iter().enumerate() {
            let r = c.rows[i];
            self.record(format!(
                "confusion truth={class} predicted_open={} predicted_closed={} unclassifiable={} total={}",
                r[0],
                r[1],
                r[2],
                c.total(i)
            ));
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("# drowsegate {}\n", self.command);
        for line in self.config.lines() {
            let _ = writeln!(out, "# {line}");
        }
        for r in &self.records {
            let _ = writeln!(out, "{r}");
        }
        out
    }
}
