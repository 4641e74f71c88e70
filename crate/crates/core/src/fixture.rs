//! Deterministic synthetic dataset used by the smoke tests, the benches and
//! the README walkthrough.
//!
//! Layout under the target directory:
//!
//! ```text
//! train/        16 labeled images of mixed sizes
//! train.json    their manifest (hands and objects-in-contact)
//! frames/       12 unlabeled frames, some showing a hand
//! frame_detections.json   detector output on frames/ (ids = sorted position)
//! external/     6 unlabeled external images
//! predictions.json        noisy detector output on train/
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curation::DetectionRecord;
use crate::error::{Error, Result};
use crate::io::{self, ImageFormat};
use crate::model::{Annotation, BoundBox, Category, DatasetManifest, ImageBuffer, ImageEntry, HAND, TARGET_OBJECT};

pub const TRAIN_IMAGES: usize = 16;
pub const FRAMES: usize = 12;
pub const EXTERNAL_IMAGES: usize = 6;

const SIZES: [(u32, u32); 4] = [(64, 48), (80, 60), (48, 48), (96, 72)];
const SKIN: [u8; 3] = [224, 172, 140];
const OBJECT: [u8; 3] = [40, 90, 200];

#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub root: PathBuf,
    pub train_images: PathBuf,
    pub train_manifest: PathBuf,
    pub frames: PathBuf,
    pub frame_detections: PathBuf,
    pub external: PathBuf,
    pub predictions: PathBuf,
}

fn textured(rng: &mut ChaCha8Rng, w: u32, h: u32) -> ImageBuffer {
    let base: [f64; 3] = [rng.random_range(40.0..200.0), rng.random_range(40.0..200.0), rng.random_range(40.0..200.0)];
    let mut data = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            for (c, b) in base.iter().enumerate() {
                let ramp = (x as f64 / w as f64 - 0.5) * 40.0 + (y as f64 / h as f64 - 0.5) * 20.0 * c as f64;
                let noise: f64 = rng.random_range(-12.0..12.0);
                data.push((b + ramp + noise).clamp(0.0, 255.0) as u8);
            }
        }
    }
    ImageBuffer::new(w, h, data).expect("consistent size")
}

fn fill(img: &mut ImageBuffer, b: &BoundBox, rgb: [u8; 3]) {
    let x1 = (b.right().ceil() as u32).min(img.width());
    let y1 = (b.bottom().ceil() as u32).min(img.height());
    for y in b.y().floor() as u32..y1 {
        for x in b.x().floor() as u32..x1 {
            img.put_pixel(x, y, rgb);
        }
    }
}

fn random_box(rng: &mut ChaCha8Rng, w: u32, h: u32) -> BoundBox {
    let bw = rng.random_range(w as f64 * 0.15..w as f64 * 0.4).floor();
    let bh = rng.random_range(h as f64 * 0.15..h as f64 * 0.4).floor();
    let x = rng.random_range(0.0..w as f64 - bw).floor();
    let y = rng.random_range(0.0..h as f64 - bh).floor();
    BoundBox::new(x, y, bw, bh).expect("positive box")
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

/// Write the fixture into `dir` (created if needed). Same seed, same bytes.
pub fn write_fixture(dir: &Path, seed: u64) -> Result<FixturePaths> {
    let paths = FixturePaths {
        root: dir.to_path_buf(),
        train_images: dir.join("train"),
        train_manifest: dir.join("train.json"),
        frames: dir.join("frames"),
        frame_detections: dir.join("frame_detections.json"),
        external: dir.join("external"),
        predictions: dir.join("predictions.json"),
    };
    for d in [&paths.train_images, &paths.frames, &paths.external] {
        mkdir(d)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut manifest = DatasetManifest {
        images: Vec::new(),
        annotations: Vec::new(),
        categories: Category::canonical(),
    };
    let mut predictions = Vec::new();
    for i in 0..TRAIN_IMAGES {
        let id = i as u64 + 1;
        let (w, h) = SIZES[i % SIZES.len()];
        let mut img = textured(&mut rng, w, h);
        let n = 1 + i % 3;
        for k in 0..n {
            let cat = if k % 2 == 0 { HAND } else { TARGET_OBJECT };
            let b = random_box(&mut rng, w, h);
            fill(&mut img, &b, if cat == HAND { SKIN } else { OBJECT });
            manifest.annotations.push(Annotation {
                id: manifest.annotations.len() as u64 + 1,
                image_id: id,
                category_id: cat,
                bbox: b,
            });
            // a detector that mostly finds the box, slightly off
            if rng.random_bool(0.8) {
                let jitter = rng.random_range(-1.5..1.5);
                predictions.push(DetectionRecord {
                    image_id: id,
                    category_id: cat,
                    bbox: b.translated(jitter, -jitter).expect("finite"),
                    score: (rng.random_range(30..100) as f64) / 100.0,
                });
            }
        }
        if rng.random_bool(0.4) {
            predictions.push(DetectionRecord {
                image_id: id,
                category_id: if rng.random_bool(0.5) { HAND } else { TARGET_OBJECT },
                bbox: random_box(&mut rng, w, h),
                score: (rng.random_range(2..60) as f64) / 100.0,
            });
        }
        let file_name = format!("train_{id:03}.png");
        io::encode_image(&img, paths.train_images.join(&file_name), ImageFormat::Png)?;
        manifest.images.push(ImageEntry {
            id,
            file_name,
            width: w,
            height: h,
        });
    }
    io::write_manifest(&manifest, &paths.train_manifest)?;
    io::write_detections(&predictions, &paths.predictions)?;

    let mut frame_dets = Vec::new();
    for i in 0..FRAMES {
        let id = i as u64 + 1;
        let mut img = textured(&mut rng, 64, 48);
        // every third frame shows a hand; every fourth has a faint object
        if i % 3 == 0 {
            let b = random_box(&mut rng, 64, 48);
            fill(&mut img, &b, SKIN);
            frame_dets.push(DetectionRecord {
                image_id: id,
                category_id: HAND,
                bbox: b,
                score: 0.85,
            });
        }
        if i % 4 == 1 {
            frame_dets.push(DetectionRecord {
                image_id: id,
                category_id: TARGET_OBJECT,
                bbox: random_box(&mut rng, 64, 48),
                score: 0.04,
            });
        }
        io::encode_image(&img, paths.frames.join(format!("frame_{id:04}.png")), ImageFormat::Png)?;
    }
    io::write_detections(&frame_dets, &paths.frame_detections)?;

    for i in 0..EXTERNAL_IMAGES {
        let img = textured(&mut rng, 72, 54);
        io::encode_image(&img, paths.external.join(format!("ext_{:02}.png", i + 1)), ImageFormat::Png)?;
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_reproducible_and_valid() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let pa = write_fixture(a.path(), 7).unwrap();
        let pb = write_fixture(b.path(), 7).unwrap();
        assert_eq!(fs::read(&pa.train_manifest).unwrap(), fs::read(&pb.train_manifest).unwrap());
        assert_eq!(fs::read(&pa.predictions).unwrap(), fs::read(&pb.predictions).unwrap());
        let m = io::load_manifest(&pa.train_manifest).unwrap();
        assert_eq!(m.manifest.images.len(), TRAIN_IMAGES);
        assert_eq!(m.clamped, 0);
        let dets = io::load_detections(&pa.frame_detections, &Category::canonical()).unwrap();
        assert!(!dets.records.is_empty());
        io::load_detections(&pa.predictions, &Category::canonical()).unwrap();
    }
}
