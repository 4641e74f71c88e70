//! Box outlines for qualitative inspection.

use crate::curation::DetectionRecord;
use crate::model::{Annotation, BoundBox, ImageBuffer};

pub const GT_COLOR: [u8; 3] = [0, 255, 0];
pub const PRED_COLOR: [u8; 3] = [255, 0, 0];

/// Integer pixel rectangle covered by `b` (inclusive bounds).
fn pixel_rect(b: &BoundBox) -> (i64, i64, i64, i64) {
    let x0 = b.x().floor() as i64;
    let y0 = b.y().floor() as i64;
    let x1 = (b.right().ceil() as i64 - 1).max(x0);
    let y1 = (b.bottom().ceil() as i64 - 1).max(y0);
    (x0, y0, x1, y1)
}

/// Outline `b` with a border `thickness` pixels wide. Parts of the outline
/// outside the image are skipped.
pub fn draw_box(img: &mut ImageBuffer, b: &BoundBox, color: [u8; 3], thickness: u32) {
    let t = thickness.max(1) as i64;
    let (x0, y0, x1, y1) = pixel_rect(b);
    let (w, h) = (img.width() as i64, img.height() as i64);
    for y in y0.max(0)..=y1.min(h - 1) {
        for x in x0.max(0)..=x1.min(w - 1) {
            let on_border = x < x0 + t || x > x1 - t || y < y0 + t || y > y1 - t;
            if on_border {
                img.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}

/// True if pixel (x, y) lies on the outline drawn by [`draw_box`].
pub fn on_outline(b: &BoundBox, thickness: u32, x: u32, y: u32) -> bool {
    let t = thickness.max(1) as i64;
    let (x0, y0, x1, y1) = pixel_rect(b);
    let (x, y) = (x as i64, y as i64);
    let inside = x >= x0 && x <= x1 && y >= y0 && y <= y1;
    inside && (x < x0 + t || x > x1 - t || y < y0 + t || y > y1 - t)
}

/// Draw ground truth, then every prediction scoring at least `conf_thresh`.
pub fn render_overlay(
    img: &ImageBuffer,
    ground_truth: &[&Annotation],
    predictions: &[&DetectionRecord],
    conf_thresh: f64,
    thickness: u32,
) -> ImageBuffer {
    let mut out = img.clone();
    for a in ground_truth {
        draw_box(&mut out, &a.bbox, GT_COLOR, thickness);
    }
    for p in predictions.iter().filter(|p| p.score >= conf_thresh) {
        draw_box(&mut out, &p.bbox, PRED_COLOR, thickness);
    }
    out
}
