use super::{GrayImage, Point, Rect};

/// Five-pixel plus sign centered on `p`, clipped to the image.
pub fn draw_crosshair(img: &mut GrayImage, p: Point, value: u8) {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let (cx, cy) = (p.x as isize, p.y as isize);
    for d in -2isize..=2 {
        for (x, y) in [(cx + d, cy), (cx, cy + d)] {
            if (0..w).contains(&x) && (0..h).contains(&y) {
                img.set(x as usize, y as usize, value);
            }
        }
    }
}

/// One-pixel rectangle outline, clipped to the image.
pub fn draw_rect_outline(img: &mut GrayImage, r: Rect, value: u8) {
    if r.w == 0 || r.h == 0 || r.x >= img.width() || r.y >= img.height() {
        return;
    }
    let x1 = (r.right() - 1).min(img.width() - 1);
    let y1 = (r.bottom() - 1).min(img.height() - 1);
    for x in r.x..=x1 {
        img.set(x, r.y, value);
        if r.bottom() - 1 == y1 {
            img.set(x, y1, value);
        }
    }
    for y in r.y..=y1 {
        img.set(r.x, y, value);
        if r.right() - 1 == x1 {
            img.set(x1, y, value);
        }
    }
}

/// Forces the first image row to `value` (alarm banner).
pub fn fill_top_row(img: &mut GrayImage, value: u8) {
    for x in 0..img.width() {
        img.set(x, 0, value);
    }
}
