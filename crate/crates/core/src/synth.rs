//! Deterministic synthetic imagery and observation streams for tests,
//! benchmarks and calibration fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::imgcore::GrayImage;

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Adds zero-mean Gaussian noise in place. `sigma <= 0` leaves the image untouched.
pub fn add_noise(img: &mut GrayImage, sigma: f64, seed: u64) {
    if sigma <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = img.get(x, y) as f64 + normal.sample(&mut rng);
            img.set(x, y, clamp_u8(v));
        }
    }
}

/// A filled disk of intensity `fg` on `bg`.
pub fn disk(width: usize, height: usize, center: (f64, f64), radius: f64, fg: u8, bg: u8) -> GrayImage {
    annulus(width, height, center, 0.0, radius, fg, bg)
}

/// A ring `inner <= r <= outer` of intensity `fg` on `bg`.
pub fn annulus(width: usize, height: usize, center: (f64, f64), inner: f64, outer: f64, fg: u8, bg: u8) -> GrayImage {
    GrayImage::from_fn(width, height, |x, y| {
        let r = ((x as f64 - center.0).powi(2) + (y as f64 - center.1).powi(2)).sqrt();
        if r <= outer && (inner <= 0.0 || r >= inner) {
            fg
        } else {
            bg
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EyeLook {
    Open,
    Closed,
}

/// Cartoon frontal face: skin ellipse with hair, brows, eyes, nose and mouth.
/// The real frontal-face cascade fires on it for face widths of roughly
/// 120 to 240 pixels.
#[derive(Clone, Debug)]
pub struct FaceScene {
    pub width: usize,
    pub height: usize,
    pub center: (f64, f64),
    pub face_width: f64,
    pub left_eye: EyeLook,
    pub right_eye: EyeLook,
    pub background: f64,
    pub skin: f64,
    /// Added to every pixel before clamping; models a global illumination change.
    pub brightness_offset: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for FaceScene {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            center: (320.0, 240.0),
            face_width: 180.0,
            left_eye: EyeLook::Open,
            right_eye: EyeLook::Open,
            background: 90.0,
            skin: 190.0,
            brightness_offset: 0.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl FaceScene {
    pub fn with_eyes(mut self, look: EyeLook) -> Self {
        self.left_eye = look;
        self.right_eye = look;
        self
    }

    /// Image-space centers of the (left, right) eyes as drawn.
    pub fn eye_centers(&self) -> [(f64, f64); 2] {
        let (cx, cy) = self.center;
        let fw = self.face_width;
        [(cx - 0.21 * fw, cy - 0.12 * fw), (cx + 0.21 * fw, cy - 0.12 * fw)]
    }

    pub fn render(&self) -> GrayImage {
        let (cx, cy) = self.center;
        let fw = self.face_width;
        let skin = self.skin;
        let (a, b) = (fw / 2.0, fw * 0.62);
        let eyes = self.eye_centers();
        let looks = [self.left_eye, self.right_eye];
        let mut img = GrayImage::from_fn(self.width, self.height, |xi, yi| {
            let (x, y) = (xi as f64, yi as f64);
            let mut v = self.background;
            if ((x - cx) / a).powi(2) + ((y - cy) / b).powi(2) <= 1.0 {
                v = if y < cy - b * 0.62 { 60.0 } else { skin };
                for (&(ex, ey), look) in eyes.iter().zip(looks) {
                    if (x - ex).abs() < fw * 0.12 && (y - (ey - fw * 0.10)).abs() < fw * 0.02 {
                        v = 70.0;
                    }
                    let in_eye = ((x - ex) / (fw * 0.11)).powi(2) + ((y - ey) / (fw * 0.05)).powi(2) <= 1.0;
                    match look {
                        EyeLook::Open => {
                            if in_eye {
                                v = 235.0;
                            }
                            if (x - ex).powi(2) + (y - ey).powi(2) <= (fw * 0.045).powi(2) {
                                v = 35.0;
                            }
                        }
                        EyeLook::Closed => {
                            if in_eye {
                                v = skin + 25.0;
                            }
                            if (x - ex).abs() < fw * 0.1 && (y - ey - fw * 0.02).abs() < 1.5 {
                                v = skin - 60.0;
                            }
                        }
                    }
                }
                if (x - cx).abs() < fw * 0.04 && y > cy - fw * 0.05 && y < cy + fw * 0.15 {
                    v = skin + 20.0;
                }
                if (y - (cy + fw * 0.17)).abs() < fw * 0.02 && (x - cx).abs() < fw * 0.08 {
                    v = skin - 50.0;
                }
                if (y - (cy + fw * 0.33)).abs() < fw * 0.03 && (x - cx).abs() < fw * 0.16 {
                    v = 90.0;
                }
            }
            clamp_u8(v + self.brightness_offset)
        });
        add_noise(&mut img, self.noise_sigma, self.seed);
        img
    }
}

/// A 25x21 open-eye window: a dark iris disk inside an almond-shaped
/// sclera, an upper lid line, and skin of brightness `level` around it.
pub fn open_eye_window(level: u8, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cx, cy) = (12.0 + rng.gen_range(-2.0..=2.0), 10.0 + rng.gen_range(-1.5..=1.5));
    let radius = rng.gen_range(4.0..=6.0);
    let skin = level as f64;
    let iris = skin - rng.gen_range(55.0..=75.0);
    let (a, b) = (rng.gen_range(9.0..=11.0), rng.gen_range(5.0..=6.5));
    let mut img = GrayImage::from_fn(25, 21, |x, y| {
        let (dx, dy) = (x as f64 - 12.0, y as f64 - 10.0);
        let e = (dx / a).powi(2) + (dy / b).powi(2);
        let r = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        let v = if e <= 1.0 && r <= radius {
            iris
        } else if e <= 1.0 {
            skin + 25.0
        } else if e <= 1.35 && dy < 0.0 {
            skin - 60.0
        } else {
            skin
        };
        clamp_u8(v)
    });
    add_noise(&mut img, 2.0, seed ^ 0x5eed);
    img
}

/// A 25x21 closed-eye window: an almost uniform lid of brightness `level`.
pub fn closed_eye_window(level: u8, seed: u64) -> GrayImage {
    let mut img = GrayImage::filled(25, 21, level);
    add_noise(&mut img, 2.0, seed ^ 0x11d);
    img
}

/// Matched open/closed eye-window sets over a brightness sweep from
/// `lo` to `hi` inclusive, `per_level` windows of each class per step.
pub fn eye_window_corpus(lo: u8, hi: u8, step: u8, per_level: usize, seed: u64) -> (Vec<GrayImage>, Vec<GrayImage>) {
    let mut open = Vec::new();
    let mut closed = Vec::new();
    let mut level = lo as u32;
    let mut k = seed;
    while level <= hi as u32 {
        for _ in 0..per_level {
            open.push(open_eye_window(level as u8, k));
            closed.push(closed_eye_window(level as u8, k.wrapping_add(1)));
            k = k.wrapping_add(2);
        }
        level += step.max(1) as u32;
    }
    (open, closed)
}

/// A white-percentage stream with labeled closures, for calibration and
/// state-machine fixtures.
#[derive(Clone, Debug)]
pub struct ObservationScript {
    pub frames: usize,
    pub baseline: f64,
    /// Half-width of the uniform baseline noise.
    pub noise: f64,
    /// Level added to the baseline during closures.
    pub closure_gap: f64,
    /// Inclusive frame ranges of closures.
    pub closures: Vec<(usize, usize)>,
    /// Inclusive frame ranges of sub-threshold bumps, with their height.
    pub distractors: Vec<(usize, usize, f64)>,
    pub seed: u64,
}

impl ObservationScript {
    pub fn generate(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.frames)
            .map(|f| {
                let mut w = self.baseline;
                if self.noise > 0.0 {
                    w += rng.gen_range(-self.noise..=self.noise);
                }
                if self.closures.iter().any(|&(s, e)| s <= f && f <= e) {
                    w += self.closure_gap;
                } else if let Some(&(_, _, h)) = self.distractors.iter().find(|&&(s, e, _)| s <= f && f <= e) {
                    w += h;
                }
                w.clamp(0.0, 100.0)
            })
            .collect()
    }
}

/// Calibration sequence: `events` alternating closures (`+gap`) and
/// distractor bumps (`+distractor`), 60 frames each, every 400 frames
/// after a 300-frame baseline, so the buffer returns to pure baseline
/// before each event.
pub fn calibration_script(
    events: usize,
    baseline: f64,
    noise: f64,
    gap: f64,
    distractor: f64,
    seed: u64,
) -> ObservationScript {
    let mut closures = Vec::new();
    let mut distractors = Vec::new();
    for i in 0..events {
        let start = 300 + 400 * i;
        if i % 2 == 0 {
            closures.push((start, start + 59));
        } else {
            distractors.push((start, start + 59, distractor));
        }
    }
    ObservationScript {
        frames: 300 + 400 * events,
        baseline,
        noise,
        closure_gap: gap,
        closures,
        distractors,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_and_annulus_pixels() {
        let d = disk(9, 9, (4.0, 4.0), 2.0, 10, 200);
        assert_eq!(d.get(4, 4), 10);
        assert_eq!(d.get(6, 4), 10);
        assert_eq!(d.get(7, 4), 200);
        let r = annulus(15, 15, (7.0, 7.0), 3.0, 5.0, 0, 255);
        assert_eq!(r.get(7, 7), 255);
        assert_eq!(r.get(11, 7), 0);
        assert_eq!(r.get(13, 7), 255);
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = FaceScene {
            noise_sigma: 3.0,
            seed: 7,
            ..Default::default()
        };
        assert_eq!(s.render(), s.render());
        let closed = s.clone().with_eyes(EyeLook::Closed).render();
        assert_ne!(closed, s.render());
    }

    #[test]
    fn windows_have_fixed_size() {
        let (open, closed) = eye_window_corpus(80, 200, 40, 2, 3);
        assert_eq!(open.len(), 8);
        assert_eq!(closed.len(), 8);
        for img in open.iter().chain(&closed) {
            assert_eq!((img.width(), img.height()), (25, 21));
        }
    }

    #[test]
    fn script_levels() {
        let s = ObservationScript {
            frames: 10,
            baseline: 30.0,
            noise: 0.0,
            closure_gap: 15.0,
            closures: vec![(2, 3)],
            distractors: vec![(6, 6, 5.0)],
            seed: 0,
        };
        assert_eq!(
            s.generate(),
            vec![30.0, 30.0, 45.0, 45.0, 30.0, 30.0, 35.0, 30.0, 30.0, 30.0]
        );
    }
}
