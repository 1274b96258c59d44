use drowsegate_core::drowsiness::{calibrate_coefficient, observations_from_values, DrowsinessConfig, LabeledSequence};
use drowsegate_core::synth::calibration_script;

fn corpus(noise: f64) -> Vec<LabeledSequence> {
    (0..3)
        .map(|seed| {
            let script = calibration_script(12, 30.0, noise, 15.0, 6.6, seed);
            let values: Vec<Option<f64>> = script.generate().into_iter().map(Some).collect();
            LabeledSequence {
                observations: observations_from_values(&values, 30.0).unwrap(),
                closures: script.closures.iter().map(|&(s, e)| (s as u64, e as u64)).collect(),
            }
        })
        .collect()
}

/// Smallest grid C that rejects a noise-free bump of height `d` yet still
/// detects a noise-free closure of height `gap`. At a candidate's first
/// frame the newest weight (1 of 180) already includes that frame.
fn noise_free_optimum(d: f64, gap: f64) -> f64 {
    let share = 1.0 / 180.0;
    (0..=50)
        .map(|i| i as f64 / 50.0)
        .find(|&c| d > 0.0 && d * (1.0 - share) < c * gap && c * gap + gap * share <= gap)
        .unwrap()
}

#[test]
fn sweep_lands_near_the_noise_free_optimum() {
    let base = DrowsinessConfig::default();
    let clean = calibrate_coefficient(&corpus(0.0), &base).unwrap();
    let optimum = noise_free_optimum(6.6, 15.0);
    assert_eq!(clean.best_c, optimum);
    let noisy = calibrate_coefficient(&corpus(2.0), &base).unwrap();
    assert_eq!(noisy.rows.len(), 51);
    // Within five grid steps, i.e. 0.1.
    let step = |c: f64| (c * 50.0).round() as i64;
    assert!(
        (step(noisy.best_c) - step(optimum)).abs() <= 5,
        "best {} vs {}",
        noisy.best_c,
        optimum
    );
    // F1 rises to a single plateau and then falls.
    let f1: Vec<f64> = noisy.rows.iter().map(|r| r.f1).collect();
    let peak = f1.iter().position(|&v| v == 1.0).unwrap();
    assert!(f1[..=peak].windows(2).all(|w| w[0] <= w[1]));
    assert!(f1[peak..].windows(2).all(|w| w[0] >= w[1]));
}
