//! `eval-eyes`: static open/closed classification over a labeled image set.

use std::path::{Path, PathBuf};

use drowsegate_core::eye_state::{calibrate_static_threshold, label_for, static_observation};
use drowsegate_core::imgcore::io::read_gray_any;
use drowsegate_core::{Error, EyeLabel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{emit_report, list_images, ReportDefault};
use crate::error::{usage, CliError, CliResult};
use crate::report::{Confusion, RunReport};
use crate::settings::Settings;

/// Measured combined white percentage; `Err(())` marks an unclassifiable image.
type Measured = Result<Option<f64>, ()>;

struct Sample {
    label: EyeLabel,
    measured: Measured,
}

fn class_dir(root: &Path, name: &str) -> CliResult<Vec<PathBuf>> {
    let dir = root.join(name);
    if !dir.is_dir() {
        return Err(CliError::InvalidDataset(format!(
            "{} has no {name}/ subdirectory",
            root.display()
        )));
    }
    list_images(&dir)
}

fn measure(path: &Path, settings: &Settings) -> CliResult<Measured> {
    let img = read_gray_any(path).map_err(|e| CliError::InvalidDataset(format!("{}: {e}", path.display())))?;
    match static_observation(&img, &settings.eye_params(), &settings.threshold_method()?) {
        Ok(w) => Ok(Ok(w)),
        Err(Error::Unclassifiable) => Ok(Err(())),
        Err(e) => Err(e.into()),
    }
}

fn confusion(samples: &[&Sample], tau: f64) -> Confusion {
    let mut c = Confusion::default();
    for s in samples {
        let row = usize::from(s.label == EyeLabel::Closed);
        let col = match s.measured {
            Err(()) => 2,
            Ok(w) => usize::from(label_for(w, tau) == EyeLabel::Closed),
        };
        c.rows[row][col] += 1;
    }
    c
}

/// Splits each class with a seeded shuffle; returns (calibration, evaluation).
fn split(samples: &[Sample], fraction: f64, seed: u64) -> (Vec<&Sample>, Vec<&Sample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut fit, mut rest) = (Vec::new(), Vec::new());
    for label in [EyeLabel::Open, EyeLabel::Closed] {
        let mut class: Vec<&Sample> = samples.iter().filter(|s| s.label == label).collect();
        class.shuffle(&mut rng);
        let n = ((class.len() as f64 * fraction).round() as usize).min(class.len());
        rest.extend(class.split_off(n));
        fit.extend(class);
    }
    (fit, rest)
}

pub fn eval_eyes(settings: &Settings, root: &Path) -> CliResult<()> {
    if !root.is_dir() {
        return Err(CliError::InvalidDataset(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let open = class_dir(root, "open")?;
    let closed = class_dir(root, "closed")?;
    if open.is_empty() || closed.is_empty() {
        return Err(CliError::InvalidDataset(format!(
            "{}: open/ has {} images and closed/ has {}; both must be non-empty",
            root.display(),
            open.len(),
            closed.len()
        )));
    }
    settings.threshold_method()?;
    let labeled: Vec<(&PathBuf, EyeLabel)> = open
        .iter()
        .map(|p| (p, EyeLabel::Open))
        .chain(closed.iter().map(|p| (p, EyeLabel::Closed)))
        .collect();
    let samples = labeled
        .par_iter()
        .map(|(p, label)| {
            Ok(Sample {
                label: *label,
                measured: measure(p, settings)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut report = RunReport::new("eval-eyes", settings.describe());
    report.record(format!(
        "images={} open={} closed={}",
        samples.len(),
        open.len(),
        closed.len()
    ));
    let (tau, evaluated) = match settings.tau {
        Some(tau) => {
            report.record(format!("tau={tau} tau_source=given"));
            (tau, samples.iter().collect::<Vec<_>>())
        }
        None => {
            let f = settings.calibrate_split;
            if !(f > 0.0 && f < 1.0) {
                return Err(usage(format!(
                    "calibrate-split must lie strictly between 0 and 1, got {f}"
                )));
            }
            let (fit, rest) = split(&samples, f, settings.seed);
            let measured: Vec<(Option<f64>, EyeLabel)> = fit
                .iter()
                .filter_map(|s| s.measured.ok().map(|w| (w, s.label)))
                .collect();
            let (tau, fit_accuracy) = calibrate_static_threshold(&measured)?;
            report.record(format!(
                "tau={tau} tau_source=calibrated calibration_images={} calibration_accuracy={:.4}",
                fit.len(),
                fit_accuracy
            ));
            (tau, rest)
        }
    };
    let c = confusion(&evaluated, tau);
    report.record(format!("evaluated={}", evaluated.len()));
    report.record(format!("accuracy={:.4}", c.accuracy()));
    report.record(format!("recall_open={:.4}", c.recall(0)));
    report.record(format!("recall_closed={:.4}", c.recall(1)));
    report.record(format!("unclassifiable={}", c.unclassifiable()));
    report.confusion(&c);
    emit_report(&report, settings, ReportDefault::Stdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<Sample> {
        let mut v = Vec::new();
        for i in 0..10 {
            v.push(Sample {
                label: EyeLabel::Open,
                measured: Ok(Some(10.0 + i as f64)),
            });
            v.push(Sample {
                label: EyeLabel::Closed,
                measured: if i == 0 { Err(()) } else { Ok(None) },
            });
        }
        v
    }

    #[test]
    fn split_is_stratified_and_seeded() {
        let s = samples();
        let (fit, rest) = split(&s, 0.3, 9);
        assert_eq!(fit.len(), 6);
        assert_eq!(rest.len(), 14);
        assert_eq!(fit.iter().filter(|x| x.label == EyeLabel::Open).count(), 3);
        let again = split(&s, 0.3, 9).0;
        assert!(fit.iter().zip(&again).all(|(a, b)| std::ptr::eq(*a, *b)));
    }

    #[test]
    fn unclassifiable_counts_against_accuracy() {
        let s = samples();
        let all: Vec<&Sample> = s.iter().collect();
        let c = confusion(&all, 15.0);
        assert_eq!(c.rows, [[5, 5, 0], [0, 9, 1]]);
        assert!((c.accuracy() - 0.7).abs() < 1e-12);
    }
}
