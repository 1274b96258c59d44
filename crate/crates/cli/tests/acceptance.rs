//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Criterion 7's throughput figure is advisory unless
//! `DROWSEGATE_RELEASE_CHECK=1`. Criterion 8 runs only when
//! `DROWSEGATE_CEW_DIR` points at a dataset with `open/` and `closed/`.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use drowsegate_core::drowsiness::{
    observations_from_values, run_stream, weighted_moving_average, AlarmKind, AverageMode, RingBuffer,
};
use drowsegate_core::eye_center::{locate_center, objective_map, WeightPolarity};
use drowsegate_core::imgcore::{gaussian_smooth_float, gradients_float};
use drowsegate_core::synth::{add_noise, annulus, calibration_script, disk, eye_window_corpus};
use drowsegate_core::thresholding::otsu_level;
use drowsegate_core::{DrowsinessConfig, EyeCenterParams, GrayImage, IntegralImage, Point, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Advisory(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.gen())
}

// Exhaustive between-class variance search, smallest level on ties.
fn otsu_oracle(img: &GrayImage) -> u8 {
    let px: Vec<f64> = img.as_raw().iter().map(|&v| v as f64).collect();
    let n = px.len() as f64;
    let mut best = (0u8, f64::MIN);
    for t in 0..=255u8 {
        let (lo, hi): (Vec<f64>, Vec<f64>) = px.iter().partition(|&&v| v <= t as f64);
        let var = if lo.is_empty() || hi.is_empty() {
            0.0
        } else {
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            (lo.len() as f64 / n) * (hi.len() as f64 / n) * (m0 - m1).powi(2)
        };
        if var > best.1 + 1e-9 {
            best = (t, var);
        }
    }
    best.0
}

// Direct Eq. (4): split the held values into `k` equal spans by position.
fn wma_oracle(values: &[f64], cfg: &DrowsinessConfig) -> f64 {
    let n = values.len();
    let k = cfg.intervals;
    let (mut num, mut den) = (0.0, 0.0);
    for span in 0..k {
        let start = (span * n).div_ceil(k);
        let end = ((span + 1) * n).div_ceil(k);
        for v in &values[start..end] {
            num += cfg.interval_weights[span] * v;
            den += cfg.interval_weights[span];
        }
    }
    match cfg.average_mode {
        AverageMode::Literal => num / cfg.window_frames as f64,
        AverageMode::Normalized => num / den,
    }
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();

    let otsu_bad = (0..100)
        .filter(|_| {
            let img = random_image(&mut rng, 16, 16);
            otsu_level(&img) != otsu_oracle(&img)
        })
        .count();
    if otsu_bad > 0 {
        failures.push(format!("otsu {otsu_bad}/100"));
    }

    let mut rects = 0usize;
    let mut rect_bad = 0usize;
    for (w, h) in [(1, 1), (16, 1), (1, 16), (5, 7), (16, 16), (13, 16)] {
        let img = random_image(&mut rng, w, h);
        let ii = IntegralImage::new(&img);
        for y in 0..h {
            for x in 0..w {
                for rh in 1..=h - y {
                    for rw in 1..=w - x {
                        let r = Rect::new(x, y, rw, rh);
                        let (mut s, mut sq) = (0u64, 0u64);
                        for yy in y..y + rh {
                            for xx in x..x + rw {
                                let v = img.get(xx, yy) as u64;
                                s += v;
                                sq += v * v;
                            }
                        }
                        rects += 1;
                        if ii.rect_sum(r) != s || ii.rect_squared_sum(r) != sq {
                            rect_bad += 1;
                        }
                    }
                }
            }
        }
    }
    if rect_bad > 0 {
        failures.push(format!("integral {rect_bad}/{rects}"));
    }

    let mut worst = 0.0f64;
    let mut ring_bad = 0;
    for i in 0..1000 {
        let mut cfg = DrowsinessConfig::default();
        if i % 2 == 1 {
            cfg.interval_weights = (0..cfg.intervals).map(|_| rng.gen_range(0.0..2.0)).collect();
            cfg.interval_weights[0] += 0.01;
        }
        let pushes = rng.gen_range(1..=700);
        let stream: Vec<f64> = (0..pushes).map(|_| rng.gen_range(0.0..=100.0)).collect();
        let mut buffer = RingBuffer::new(cfg.window_frames);
        stream.iter().for_each(|v| buffer.push(*v));
        let held = &stream[stream.len().saturating_sub(cfg.window_frames)..];
        if buffer.to_vec() != held {
            ring_bad += 1;
        }
        for mode in [AverageMode::Literal, AverageMode::Normalized] {
            cfg.average_mode = mode;
            let got = weighted_moving_average(&buffer, &cfg).unwrap();
            worst = worst.max((got - wma_oracle(held, &cfg)).abs());
        }
    }
    if worst > 1e-9 {
        failures.push(format!("moving average max error {worst:e}"));
    }
    if ring_bad > 0 {
        failures.push(format!("ring buffer {ring_bad}/1000"));
    }
    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(10) {
        failures.push(format!("took {elapsed:?}"));
    }
    let detail = format!(
        "otsu 100 images, {rects} rectangles, 1000 streams x 2 modes (max error {worst:.1e}), {:.2}s",
        elapsed.as_secs_f64()
    );
    if failures.is_empty() {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(format!("{detail}; {}", failures.join(", ")))
    }
}

// Objective at every candidate, summed straight from the definition.
fn objective_oracle(region: &GrayImage, params: &EyeCenterParams) -> Vec<f64> {
    let smooth = gaussian_smooth_float(region, params.sigma).unwrap();
    let (gx, gy) = gradients_float(&smooth).unwrap();
    let (w, h) = (region.width(), region.height());
    let mags: Vec<f64> = (0..w * h).map(|i| gx.as_slice()[i].hypot(gy.as_slice()[i])).collect();
    let mean = mags.iter().sum::<f64>() / mags.len() as f64;
    let sd = (mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / mags.len() as f64).sqrt();
    let cut = mean + params.gradient_threshold * sd;
    let samples: Vec<(f64, f64, f64, f64)> = (0..w * h)
        .filter(|&i| mags[i] > cut && mags[i] > 0.0)
        .map(|i| {
            (
                (i % w) as f64,
                (i / w) as f64,
                gx.as_slice()[i] / mags[i],
                gy.as_slice()[i] / mags[i],
            )
        })
        .collect();
    let mut out = Vec::with_capacity(w * h);
    for cy in 0..h {
        for cx in 0..w {
            let mut sum = 0.0;
            for &(x, y, ux, uy) in &samples {
                let (dx, dy) = (x - cx as f64, y - cy as f64);
                let norm = dx.hypot(dy);
                if norm == 0.0 {
                    continue;
                }
                let dot = (dx / norm) * ux + (dy / norm) * uy;
                sum += if params.clamp_negative { dot.max(0.0) } else { dot }.powi(2);
            }
            let v = smooth.get(cx, cy);
            let weight = match params.polarity {
                WeightPolarity::Inverted => 255.0 - v,
                WeightPolarity::Literal => v,
                WeightPolarity::Uniform => 1.0,
            };
            out.push(weight.max(0.0) * sum / samples.len() as f64);
        }
    }
    out
}

fn criterion_2() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (w, h) = (48usize, 40usize);
    let fixtures = 60;
    let mut hits = 0;
    let mut worst = 0.0f64;
    for i in 0..fixtures {
        let r = rng.gen_range(3..=9) as f64;
        let margin = r + 6.0;
        let c = (
            rng.gen_range(margin..w as f64 - margin).round(),
            rng.gen_range(margin..h as f64 - margin).round(),
        );
        let bg = rng.gen_range(180..=240u8);
        let fg = rng.gen_range(20..=70u8);
        let sigma = rng.gen_range(0.0..=5.0);
        let (mut img, params) = if i % 3 == 2 {
            // Dark ring with a bright hole, scored on gradient alignment alone.
            let ring = annulus(w, h, c, r * 0.5, r, fg, bg);
            (
                ring,
                EyeCenterParams {
                    polarity: WeightPolarity::Uniform,
                    ..Default::default()
                },
            )
        } else {
            (disk(w, h, c, r, fg, bg), EyeCenterParams::default())
        };
        add_noise(&mut img, sigma, 1000 + i as u64);
        if let Ok((p, _)) = locate_center(&img, &params) {
            if p.distance(Point::new(c.0 as usize, c.1 as usize)) <= 2.0 {
                hits += 1;
            }
        }
        let fast = objective_map(&img, &params).unwrap();
        for (a, b) in fast.values.as_slice().iter().zip(objective_oracle(&img, &params)) {
            worst = worst.max((a - b).abs());
        }
    }
    let rate = hits as f64 / fixtures as f64;
    let elapsed = t.elapsed();
    verdict(
        rate >= 0.95 && worst <= 1e-6 && elapsed < Duration::from_secs(30),
        format!(
            "{hits}/{fixtures} within 2 px ({:.1}%), brute-force max difference {worst:.1e}, {:.2}s",
            rate * 100.0,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let (open, closed) = eye_window_corpus(80, 200, 10, 8, 3);
    write_pgm_frames(&dir.path().join("open"), open);
    write_pgm_frames(&dir.path().join("closed"), closed);
    let out = drowsegate(&[
        "compare-thresholds",
        path_str(&dir.path().join("open")),
        path_str(&dir.path().join("closed")),
    ]);
    if out.status.code() != Some(0) {
        return Verdict::Fail(format!("compare-thresholds failed: {}", stderr(&out)));
    }
    let text = stdout(&out);
    let gap = |name: &str| -> f64 {
        text.lines()
            .filter(|l| l.starts_with("method="))
            .find(|l| field(l, "method") == Some(name))
            .and_then(|l| field(l, "gap")?.parse().ok())
            .unwrap_or(f64::NAN)
    };
    let (agbt, simple) = (gap("adaptive-gaussian"), gap("simple-binary"));
    verdict(
        agbt >= 10.0 && agbt >= simple,
        format!("AGBT gap {agbt:.2} points, simple binary gap {simple:.2} points"),
    )
}

fn replay(dir: &Path, name: &str, values: &[String]) -> (Option<i32>, String) {
    let p = dir.join(name);
    std::fs::write(&p, values.join("\n")).unwrap();
    let out = drowsegate(&["detect", path_str(&p)]);
    (out.status.code(), stdout(&out))
}

fn criterion_4() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let level = |v: &str, n: usize| vec![v.to_string(); n];
    let closure = [level("30", 300), level("55", 100)].concat();
    let short = [level("30", 300), level("55", 23), level("30", 77)].concat();
    let (code, log) = replay(dir.path(), "closure.obs", &closure);
    let (_, again) = replay(dir.path(), "closure.obs", &closure);
    let (_, short_log) = replay(dir.path(), "short.obs", &short);
    let events = event_lines(&log);
    let expected = "kind=raised frame_index=323 timestamp_s=10.766667";
    let ok = code == Some(0)
        && events.len() == 1
        && events[0].starts_with(expected)
        && event_lines(&short_log).is_empty()
        && log == again;
    verdict(
        ok,
        format!(
            "closure log {:?}; 23-frame closure events {}; repeat identical {}",
            events,
            event_lines(&short_log).len(),
            log == again
        ),
    )
}

fn criterion_5() -> Verdict {
    // Observation level: a +20 shift of every value with the eyes open.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let step_at = 600;
    let values: Vec<Option<f64>> = (0..1500)
        .map(|i| Some(30.0 + rng.gen_range(-2.0..=2.0) + if i >= step_at { 20.0 } else { 0.0 }))
        .collect();
    let events = run_stream(
        &observations_from_values(&values, 30.0).unwrap(),
        &DrowsinessConfig::default(),
    )
    .unwrap();
    let late = events
        .iter()
        .filter(|e| e.kind == AlarmKind::Raised && e.frame_index >= (step_at + 300) as u64)
        .count();
    let transient = events.iter().filter(|e| e.kind == AlarmKind::Raised).count() - late;

    // Image level: the same face with a +20 global brightness step.
    let dir = tempfile::tempdir().unwrap();
    let video = dir.path().join("tunnel.y4m");
    let frames = 700;
    write_y4m(
        &video,
        (0..frames).map(|i| {
            let mut s = scene(320, 240, i, None);
            if i >= 350 {
                s.brightness_offset = 20.0;
            }
            s.render()
        }),
        30,
    );
    let out = drowsegate(&["detect", path_str(&video), "--cascade", path_str(&cascade())]);
    let raised = event_lines(&stdout(&out))
        .iter()
        .filter(|l| l.starts_with("kind=raised"))
        .count();
    let ok = late == 0 && out.status.code() == Some(0) && raised == 0;
    verdict(
        ok,
        format!(
            "observation step: {late} raised after 300 post-step frames ({transient} during adaptation); \
             brightness step video: {raised} raised over {frames} frames"
        ),
    )
}

fn noise_free_optimum(d: f64, gap: f64) -> f64 {
    let share = 1.0 / 180.0;
    (0..=50)
        .map(|i| i as f64 / 50.0)
        .find(|&c| d * (1.0 - share) < c * gap && c * gap + gap * share <= gap)
        .unwrap()
}

fn criterion_6() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..3u64 {
        let script = calibration_script(12, 30.0, 2.0, 15.0, 6.6, seed);
        let values: Vec<String> = script.generate().iter().map(|v| format!("{v:.6}")).collect();
        std::fs::write(dir.path().join(format!("seq{seed}.obs")), values.join("\n")).unwrap();
        let closures: Vec<String> = script.closures.iter().map(|(s, e)| format!("{s} {e}")).collect();
        std::fs::write(dir.path().join(format!("seq{seed}.closures")), closures.join("\n")).unwrap();
    }
    let out = drowsegate(&["calibrate", path_str(dir.path())]);
    if out.status.code() != Some(0) {
        return Verdict::Fail(format!("calibrate failed: {}", stderr(&out)));
    }
    let text = stdout(&out);
    let rows = text
        .lines()
        .filter(|l| l.trim_start().starts_with(|c: char| c.is_ascii_digit()))
        .count();
    let best = report_value(&text, "best_c").unwrap_or(f64::NAN);
    let optimum = noise_free_optimum(6.6, 15.0);
    let steps = ((best - optimum) * 50.0).round().abs();
    verdict(
        rows == 51 && steps <= 5.0,
        format!("best C {best:.2}, fixture optimum {optimum:.2} ({steps} grid steps apart), {rows} rows"),
    )
}

fn criterion_7() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let video = dir.path().join("bench.y4m");
    let closure = (300usize, 399usize);
    face_video(&video, 640, 480, 400, Some(closure));
    let sidecar = dir.path().join("bench.closures");
    std::fs::write(&sidecar, format!("{} {}\n", closure.0, closure.1)).unwrap();
    let out = drowsegate(&[
        "bench",
        path_str(&video),
        "--cascade",
        path_str(&cascade()),
        "--closures",
        path_str(&sidecar),
        "--budget-ms",
        "33",
    ]);
    let report = stdout(&out);
    let fps = report_value(&report, "fps").unwrap_or(0.0);
    let mean_ms = report_value(&report, "mean_frame_ms").unwrap_or(f64::INFINITY);
    let latency = report_value(&report, "mean_latency_s");
    let stages = report.lines().filter(|l| l.starts_with("stage=")).count();
    let detail = format!(
        "{fps:.1} FPS ({mean_ms:.2} ms/frame) at 640x480, closure latency {}, {stages} stage rows",
        latency.map_or("missed".to_string(), |l| format!("{l:.3}s"))
    );
    let latency_ok = latency.is_some_and(|l| l <= 1.0) && stages == 5;
    let fast = out.status.code() == Some(0) && fps >= 30.0;
    let release = std::env::var("DROWSEGATE_RELEASE_CHECK").is_ok_and(|v| v == "1");
    match (latency_ok, fast) {
        (false, _) => Verdict::Fail(detail),
        (true, true) => Verdict::Pass(detail),
        (true, false) if release => Verdict::Fail(detail),
        (true, false) => Verdict::Advisory(detail),
    }
}

fn criterion_8() -> Verdict {
    let Ok(root) = std::env::var("DROWSEGATE_CEW_DIR") else {
        return Verdict::Skip("DROWSEGATE_CEW_DIR not set".into());
    };
    let root = Path::new(&root);
    if !root.join("open").is_dir() || !root.join("closed").is_dir() {
        return Verdict::Skip(format!("{} lacks open/ and closed/", root.display()));
    }
    let t = Instant::now();
    let out = drowsegate(&["eval-eyes", path_str(root), "--calibrate-split", "0.5", "--seed", "0"]);
    let elapsed = t.elapsed();
    let text = stdout(&out);
    let accuracy = report_value(&text, "accuracy").unwrap_or(0.0);
    let images = report_value(&text, "images").unwrap_or(0.0);
    verdict(
        out.status.code() == Some(0) && accuracy >= 0.80 && elapsed < Duration::from_secs(300),
        format!(
            "accuracy {:.1}% over {images} images, {:.1}s",
            accuracy * 100.0,
            elapsed.as_secs_f64()
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalences", criterion_1),
        ("eye-center localization", criterion_2),
        ("threshold-gap ordering", criterion_3),
        ("state-machine determinism", criterion_4),
        ("illumination adaptation", criterion_5),
        ("calibration sweep", criterion_6),
        ("performance budget", criterion_7),
        ("CEW evaluation", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Advisory(d) => ("FAIL (advisory)", d),
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} {tag}: {name}: {detail}", i + 1);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
