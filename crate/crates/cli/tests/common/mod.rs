#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drowsegate_core::imgcore::io::{write_pgm, Y4mWriter};
use drowsegate_core::synth::{EyeLook, FaceScene};
use drowsegate_core::GrayImage;

pub fn cascade() -> PathBuf {
    PathBuf::from(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/frontalface_default.xml"
    ))
}

pub fn drowsegate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drowsegate"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Lines of an event log that are alarm events.
pub fn event_lines(log: &str) -> Vec<&str> {
    log.lines().filter(|l| l.starts_with("kind=")).collect()
}

/// Value of `key=` in a `key=value` record line.
pub fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
}

/// First report line starting with `key=`, parsed.
pub fn report_value(report: &str, key: &str) -> Option<f64> {
    report.lines().find_map(|l| {
        l.strip_prefix(key)?
            .strip_prefix('=')?
            .split_whitespace()
            .next()?
            .parse()
            .ok()
    })
}

/// A face scene for frame `i`: eyes closed inside `closure`, fresh noise per frame.
pub fn scene(width: usize, height: usize, i: usize, closure: Option<(usize, usize)>) -> FaceScene {
    let closed = closure.is_some_and(|(s, e)| s <= i && i <= e);
    let face_width = width as f64 * 150.0 / 320.0;
    FaceScene {
        width,
        height,
        center: (width as f64 / 2.0, height as f64 / 2.0),
        face_width,
        noise_sigma: 1.0,
        seed: i as u64,
        ..Default::default()
    }
    .with_eyes(if closed { EyeLook::Closed } else { EyeLook::Open })
}

pub fn write_pgm_frames(dir: &Path, frames: impl IntoIterator<Item = GrayImage>) -> usize {
    std::fs::create_dir_all(dir).unwrap();
    let mut n = 0;
    for (i, f) in frames.into_iter().enumerate() {
        write_pgm(dir.join(format!("{i:05}.pgm")), &f).unwrap();
        n += 1;
    }
    n
}

pub fn write_y4m(path: &Path, frames: impl IntoIterator<Item = GrayImage>, fps: u32) {
    let mut frames = frames.into_iter().peekable();
    let first = frames.peek().expect("at least one frame");
    let mut w = Y4mWriter::create(path, first.width(), first.height(), fps).unwrap();
    for f in frames {
        w.write_frame(&f).unwrap();
    }
    w.finish().unwrap();
}

/// A face video of `frames` frames with the eyes closed over `closure`.
pub fn face_video(path: &Path, width: usize, height: usize, frames: usize, closure: Option<(usize, usize)>) {
    write_y4m(path, (0..frames).map(|i| scene(width, height, i, closure).render()), 30);
}
