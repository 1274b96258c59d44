//! Uncompressed raster I/O: binary PGM (P5) read/write, binary PPM (P6)
//! read, and Y4M video read with the luma plane taken as grayscale.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{to_grayscale, GrayImage, RgbImage};
use crate::error::{Error, Result};

fn decode_err(msg: impl Into<String>) -> Error {
    Error::FrameDecode(msg.into())
}

struct Header {
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

// Netpbm header: magic, then width, height, maxval separated by whitespace
// with `#` comments running to end of line, then exactly one whitespace byte.
fn parse_header(bytes: &[u8], magic: &[u8; 2]) -> Result<Header> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(decode_err(format!("expected magic {}", String::from_utf8_lossy(magic))));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(decode_err("truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(decode_err("malformed header field"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| decode_err("header field out of range"))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(decode_err("missing whitespace after header")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(decode_err("zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(decode_err(format!(
            "unsupported maxval {maxval}; only 8-bit samples are read"
        )));
    }
    Ok(Header {
        width,
        height,
        maxval,
        data_offset: pos,
    })
}

fn rescale(samples: &mut [u8], maxval: usize) {
    if maxval != 255 {
        for s in samples.iter_mut() {
            *s = ((*s as usize).min(maxval) * 255 + maxval / 2).div_euclid(maxval) as u8;
        }
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let h = parse_header(bytes, b"P5")?;
    let n = h.width * h.height;
    let body = bytes
        .get(h.data_offset..h.data_offset + n)
        .ok_or_else(|| decode_err("truncated PGM pixel data"))?;
    let mut data = body.to_vec();
    rescale(&mut data, h.maxval);
    GrayImage::new(h.width, h.height, data)
}

pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let h = parse_header(bytes, b"P6")?;
    let n = h.width * h.height * 3;
    let body = bytes
        .get(h.data_offset..h.data_offset + n)
        .ok_or_else(|| decode_err("truncated PPM pixel data"))?;
    let mut data = body.to_vec();
    rescale(&mut data, h.maxval);
    RgbImage::new(h.width, h.height, data)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_raw());
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&std::fs::read(path)?)
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<RgbImage> {
    decode_ppm(&std::fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(&encode_pgm(img))?;
    Ok(())
}

/// Reads a PGM or PPM file (chosen by magic number) as grayscale.
pub fn read_gray_any(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    match bytes.get(..2) {
        Some(b"P5") => decode_pgm(&bytes),
        Some(b"P6") => Ok(to_grayscale(&decode_ppm(&bytes)?)),
        _ => Err(decode_err("not a binary PGM or PPM file")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Chroma {
    C420,
    C444,
    Mono,
}

/// Streaming Y4M reader yielding the luma plane of every frame. Accepts
/// 8-bit 4:2:0 (any siting), 4:4:4 and mono streams; chroma is read and dropped.
pub struct Y4mReader<R: Read> {
    reader: R,
    width: usize,
    height: usize,
    chroma_len: usize,
    fps: Option<f64>,
    frame_buf: Vec<u8>,
}

impl Y4mReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

// Reads one newline-terminated line; Ok(None) on EOF before any byte.
fn read_line<R: Read>(reader: &mut R, limit: usize) -> Result<Option<Vec<u8>>> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match reader.read(&mut byte)? {
            0 if line.is_empty() => return Ok(None),
            0 => return Err(decode_err("Y4M line truncated")),
            _ if byte[0] == b'\n' => return Ok(Some(line)),
            _ => {
                line.push(byte[0]);
                if line.len() > limit {
                    return Err(decode_err("Y4M header line too long"));
                }
            }
        }
    }
}

impl<R: Read> Y4mReader<R> {
    pub fn new(mut reader: R) -> Result<Self> {
        let header = read_line(&mut reader, 1024)?.ok_or_else(|| decode_err("empty Y4M stream"))?;
        let header = String::from_utf8(header).map_err(|_| decode_err("Y4M header is not ASCII"))?;
        let mut tokens = header.split_ascii_whitespace();
        if tokens.next() != Some("YUV4MPEG2") {
            return Err(decode_err("missing YUV4MPEG2 signature"));
        }
        let (mut width, mut height, mut chroma, mut fps) = (0usize, 0usize, Chroma::C420, None);
        for tok in tokens {
            let (tag, value) = tok.split_at(1);
            match tag {
                "W" => width = value.parse().map_err(|_| decode_err("bad Y4M width"))?,
                "H" => height = value.parse().map_err(|_| decode_err("bad Y4M height"))?,
                "C" => {
                    chroma = match value {
                        "420" | "420jpeg" | "420paldv" | "420mpeg2" => Chroma::C420,
                        "444" => Chroma::C444,
                        "mono" => Chroma::Mono,
                        other => {
                            return Err(Error::InvalidInput(format!(
                                "Y4M colorspace C{other} not accepted (use 8-bit C420, C444 or Cmono)"
                            )))
                        }
                    }
                }
                "F" => {
                    let (num, den) = value.split_once(':').ok_or_else(|| decode_err("bad Y4M frame rate"))?;
                    let num: f64 = num.parse().map_err(|_| decode_err("bad Y4M frame rate"))?;
                    let den: f64 = den.parse().map_err(|_| decode_err("bad Y4M frame rate"))?;
                    if num > 0.0 && den > 0.0 {
                        fps = Some(num / den);
                    }
                }
                _ => {}
            }
        }
        if width == 0 || height == 0 {
            return Err(decode_err("Y4M header lacks dimensions"));
        }
        let chroma_len = match chroma {
            Chroma::C420 => 2 * width.div_ceil(2) * height.div_ceil(2),
            Chroma::C444 => 2 * width * height,
            Chroma::Mono => 0,
        };
        Ok(Self {
            reader,
            width,
            height,
            chroma_len,
            fps,
            frame_buf: vec![0; width * height + chroma_len],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Frame rate from the header, when present.
    pub fn fps(&self) -> Option<f64> {
        self.fps
    }

    /// Next frame, or `None` at a clean end of stream.
    pub fn next_frame(&mut self) -> Result<Option<GrayImage>> {
        let Some(line) = read_line(&mut self.reader, 1024)? else {
            return Ok(None);
        };
        if !line.starts_with(b"FRAME") {
            return Err(decode_err("expected FRAME marker"));
        }
        debug_assert_eq!(self.frame_buf.len(), self.width * self.height + self.chroma_len);
        self.reader
            .read_exact(&mut self.frame_buf)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => decode_err("Y4M frame truncated"),
                _ => Error::Io(e),
            })?;
        let luma = self.frame_buf[..self.width * self.height].to_vec();
        GrayImage::new(self.width, self.height, luma).map(Some)
    }
}

impl<R: Read> Iterator for Y4mReader<R> {
    type Item = Result<GrayImage>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Writes grayscale frames as a `Cmono` Y4M stream.
pub struct Y4mWriter<W: Write> {
    writer: W,
    width: usize,
    height: usize,
}

impl Y4mWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, width: usize, height: usize, fps: u32) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), width, height, fps)
    }
}

impl<W: Write> Y4mWriter<W> {
    pub fn new(mut writer: W, width: usize, height: usize, fps: u32) -> Result<Self> {
        writeln!(writer, "YUV4MPEG2 W{width} H{height} F{fps}:1 Ip A1:1 Cmono")?;
        Ok(Self { writer, width, height })
    }

    pub fn write_frame(&mut self, img: &GrayImage) -> Result<()> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::InvalidInput(format!(
                "frame is {}x{}, stream is {}x{}",
                img.width(),
                img.height(),
                self.width,
                self.height
            )));
        }
        self.writer.write_all(b"FRAME\n")?;
        self.writer.write_all(img.as_raw())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.writer.flush()?;
        Ok(self.writer)
    }
}
