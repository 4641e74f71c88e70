//! Shared domain types: RGB rasters, axis-aligned boxes, categories and
//! labeled image collections.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Category id of hands in the canonical category set.
pub const HAND: u32 = 1;
/// Category id of objects in contact with a hand.
pub const TARGET_OBJECT: u32 = 2;

/// Decoded 8-bit RGB raster, row-major, three interleaved samples per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub const CHANNELS: usize = 3;

    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * Self::CHANNELS;
        if data.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} RGB needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            data,
        })
    }

    /// Image filled with a single color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        let data = rgb.iter().copied().cycle().take(n * Self::CHANNELS).collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.offset(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.offset(x, y);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        (y as usize * self.width as usize + x as usize) * Self::CHANNELS
    }
}

/// Axis-aligned box, top-left origin, continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl BoundBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let reason = if !(x.is_finite() && y.is_finite()) {
            Some("origin must be finite")
        } else if !(w.is_finite() && h.is_finite()) {
            Some("size must be finite")
        } else if w <= 0.0 || h <= 0.0 {
            Some("width and height must be positive")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(Error::InvalidBox { x, y, w, h, reason }),
            None => Ok(BoundBox { x, y, w, h }),
        }
    }

    pub fn from_xywh(v: [f64; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }

    /// Intersection with the image rectangle `[0, width] x [0, height]`.
    /// `None` when nothing of positive area remains.
    pub fn clamp_to(&self, width: f64, height: f64) -> Option<BoundBox> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = self.right().min(width);
        let y1 = self.bottom().min(height);
        BoundBox::new(x0, y0, x1 - x0, y1 - y0).ok()
    }

    pub fn is_within(&self, width: f64, height: f64) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.right() <= width && self.bottom() <= height
    }

    /// Scale coordinates independently along each axis.
    pub fn scaled(&self, sx: f64, sy: f64) -> Result<BoundBox> {
        BoundBox::new(self.x * sx, self.y * sy, self.w * sx, self.h * sy)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Result<BoundBox> {
        BoundBox::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

impl Serialize for BoundBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_xywh().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 4]>::deserialize(d)?;
        BoundBox::from_xywh(v).map_err(serde::de::Error::custom)
    }
}

pub fn box_area(b: &BoundBox) -> f64 {
    b.w * b.h
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BoundBox, b: &BoundBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x.max(b.x);
    let ih = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    // extents from the same corner arithmetic as the intersection, so that
    // iou(a, a) is exactly 1
    let extent = |r: &BoundBox| (r.right() - r.x) * (r.bottom() - r.y);
    let union = extent(a) + extent(b) - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: u32,
    pub name: String,
}

impl Category {
    pub fn new(id: u32, name: impl Into<String>) -> Self {
        Category {
            id,
            name: name.into(),
        }
    }

    /// `{1: "hand", 2: "targetobject"}`
    pub fn canonical() -> Vec<Category> {
        vec![
            Category::new(HAND, "hand"),
            Category::new(TARGET_OBJECT, "targetobject"),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    pub bbox: BoundBox,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

/// A labeled image collection.
///
/// Construct through [`DatasetManifest::validated`] (or the loader in
/// [`crate::io`]) so that the reference and bound invariants hold.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub images: Vec<ImageEntry>,
    pub annotations: Vec<Annotation>,
    pub categories: Vec<Category>,
}

impl DatasetManifest {
    /// Check invariants, clamping partially-outside boxes. Returns the
    /// manifest and the number of boxes that were clamped.
    pub fn validated(mut self) -> Result<(Self, usize)> {
        let mut sizes = HashMap::new();
        for img in &self.images {
            if sizes.insert(img.id, (img.width, img.height)).is_some() {
                return Err(Error::DuplicateImageId(img.id));
            }
            if img.width == 0 || img.height == 0 {
                return Err(Error::InvalidManifest(format!(
                    "image {} has zero dimension {}x{}",
                    img.id, img.width, img.height
                )));
            }
        }
        let mut cat_ids = HashSet::new();
        for c in &self.categories {
            if !cat_ids.insert(c.id) {
                return Err(Error::InvalidManifest(format!("duplicate category id {}", c.id)));
            }
        }

        let mut clamped = 0;
        for ann in &mut self.annotations {
            let &(iw, ih) = sizes.get(&ann.image_id).ok_or(Error::DanglingImageId {
                    annotation_id: ann.id,
                    image_id: ann.image_id,
                })?;
            if !cat_ids.contains(&ann.category_id) {
                return Err(Error::InvalidManifest(format!(
                    "annotation {} has unknown category id {}",
                    ann.id, ann.category_id
                )));
            }
            let (w, h) = (iw as f64, ih as f64);
            if !ann.bbox.is_within(w, h) {
                ann.bbox = ann.bbox.clamp_to(w, h).ok_or(Error::BoxOutsideImage {
                    annotation_id: ann.id,
                    image_id: ann.image_id,
                })?;
                clamped += 1;
            }
        }
        Ok((self, clamped))
    }

    pub fn image(&self, id: u64) -> Option<&ImageEntry> {
        self.images.iter().find(|i| i.id == id)
    }

    pub fn annotations_for(&self, image_id: u64) -> impl Iterator<Item = &Annotation> {
        self.annotations.iter().filter(move |a| a.image_id == image_id)
    }

    pub fn category(&self, id: u32) -> Option<&Category> {
        self.categories.iter().find(|c| c.id == id)
    }
}
