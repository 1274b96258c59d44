//! Frame sources and the one-frame-ahead decode thread.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use drowsegate_core::imgcore::io::{read_gray_any, Y4mReader};
use drowsegate_core::{Error, GrayImage};

use crate::error::{usage, CliResult};

enum Kind {
    Files(Vec<PathBuf>),
    Y4m(Box<Y4mReader<BufReader<File>>>),
}

/// Frames from a directory of PGM (or, failing that, PPM) files in
/// lexicographic order, or from a Y4M file. All frames must share the
/// dimensions of the first.
pub struct FrameSource {
    kind: Kind,
    name: String,
    cursor: usize,
    dims: Option<(usize, usize)>,
}

fn list_with_extension(dir: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub(crate) fn decode_error(path: &Path, e: Error) -> Error {
    match e {
        Error::FrameDecode(_) => e,
        other => Error::FrameDecode(format!("{}: {other}", path.display())),
    }
}

impl FrameSource {
    pub fn open(path: &Path) -> CliResult<Self> {
        let name = path.display().to_string();
        let kind = if path.is_dir() {
            let mut files = list_with_extension(path, "pgm")?;
            if files.is_empty() {
                files = list_with_extension(path, "ppm")?;
            }
            if files.is_empty() {
                return Err(usage(format!("no frames in {name}")));
            }
            Kind::Files(files)
        } else if path.is_file() {
            if !path.extension().is_some_and(|e| e.eq_ignore_ascii_case("y4m")) {
                return Err(usage(format!("{name}: expected a frame directory or a .y4m file")));
            }
            Kind::Y4m(Box::new(Y4mReader::open(path)?))
        } else {
            return Err(usage(format!("frame source {name} does not exist")));
        };
        Ok(Self {
            kind,
            name,
            cursor: 0,
            dims: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Frame count when known without decoding.
    pub fn len_hint(&self) -> Option<usize> {
        match &self.kind {
            Kind::Files(f) => Some(f.len()),
            Kind::Y4m(_) => None,
        }
    }

    pub fn fps_hint(&self) -> Option<f64> {
        match &self.kind {
            Kind::Files(_) => None,
            Kind::Y4m(r) => r.fps(),
        }
    }

    pub fn next_frame(&mut self) -> Result<Option<GrayImage>, Error> {
        let frame = match &mut self.kind {
            Kind::Files(files) => match files.get(self.cursor) {
                None => None,
                Some(p) => Some(read_gray_any(p).map_err(|e| decode_error(p, e))?),
            },
            Kind::Y4m(r) => r.next_frame().map_err(|e| decode_error(Path::new(&self.name), e))?,
        };
        let Some(frame) = frame else {
            return Ok(None);
        };
        let dims = (frame.width(), frame.height());
        match self.dims {
            None => self.dims = Some(dims),
            Some(d) if d != dims => {
                return Err(Error::FrameDecode(format!(
                    "frame {} is {}x{}, expected {}x{}",
                    self.cursor, dims.0, dims.1, d.0, d.1
                )))
            }
            Some(_) => {}
        }
        self.cursor += 1;
        Ok(Some(frame))
    }
}

/// A decoded frame and the time spent decoding it.
pub struct Decoded {
    pub frame: GrayImage,
    pub decode: Duration,
}

/// Decodes on a worker thread. The rendezvous channel lets the worker hold
/// at most one finished frame while the consumer processes the previous one.
pub struct Prefetch {
    rx: Receiver<Result<Decoded, Error>>,
    worker: Option<JoinHandle<()>>,
}

impl Prefetch {
    pub fn spawn(mut source: FrameSource) -> Self {
        let (tx, rx) = sync_channel(0);
        let worker = std::thread::spawn(move || loop {
            let t = Instant::now();
            let item = match source.next_frame() {
                Ok(Some(frame)) => Ok(Decoded {
                    frame,
                    decode: t.elapsed(),
                }),
                Ok(None) => break,
                Err(e) => Err(e),
            };
            let failed = item.is_err();
            if tx.send(item).is_err() || failed {
                break;
            }
        });
        Self {
            rx,
            worker: Some(worker),
        }
    }

    pub fn recv(&mut self) -> Option<Result<Decoded, Error>> {
        self.rx.recv().ok()
    }
}

impl Drop for Prefetch {
    fn drop(&mut self) {
        // Unblock a worker waiting on send, then wait for it.
        let (_, dead) = sync_channel(0);
        drop(std::mem::replace(&mut self.rx, dead));
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use drowsegate_core::imgcore::io::write_pgm;

    #[test]
    fn directory_order_and_dimension_check() {
        let dir = tempfile::tempdir().unwrap();
        for (name, v, w) in [("b.pgm", 2u8, 4), ("a.pgm", 1, 4), ("c.pgm", 3, 5)] {
            write_pgm(dir.path().join(name), &GrayImage::filled(w, 3, v)).unwrap();
        }
        let mut src = FrameSource::open(dir.path()).unwrap();
        assert_eq!(src.len_hint(), Some(3));
        assert_eq!(src.next_frame().unwrap().unwrap().get(0, 0), 1);
        assert_eq!(src.next_frame().unwrap().unwrap().get(0, 0), 2);
        assert!(matches!(src.next_frame(), Err(Error::FrameDecode(_))));
    }

    #[test]
    fn empty_directory_has_no_frames() {
        let dir = tempfile::tempdir().unwrap();
        let err = FrameSource::open(dir.path()).err().unwrap();
        assert!(err.to_string().contains("no frames"));
    }

    #[test]
    fn prefetch_delivers_in_order_and_stops_after_error() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..4u8 {
            write_pgm(dir.path().join(format!("{i:03}.pgm")), &GrayImage::filled(3, 3, i)).unwrap();
        }
        std::fs::write(dir.path().join("002.pgm"), b"P5\n3 3\n255\n\x00").unwrap();
        let mut p = Prefetch::spawn(FrameSource::open(dir.path()).unwrap());
        assert_eq!(p.recv().unwrap().unwrap().frame.get(0, 0), 0);
        assert_eq!(p.recv().unwrap().unwrap().frame.get(0, 0), 1);
        assert!(p.recv().unwrap().is_err());
        assert!(p.recv().is_none());
    }
}
