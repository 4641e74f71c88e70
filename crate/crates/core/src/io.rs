//! Readers and writers for manifests, detection files, pool manifests and
//! image files.
//!
//! Every JSON file this module writes is canonical: object keys sorted,
//! collections sorted by id, two-space indentation and a trailing newline.
//! Logically equal values therefore produce byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Cursor, Write};
use std::path::{Path, PathBuf};

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageReader};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curation::{BackgroundPool, DetectionRecord};
use crate::error::{Error, Result};
use crate::model::{BoundBox, Category, DatasetManifest, ImageBuffer};

/// A validated manifest together with the number of boxes clamped to their
/// image bounds while loading.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: DatasetManifest,
    pub clamped: usize,
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<LoadedManifest> {
    let path = path.as_ref();
    let raw: DatasetManifest = read_json(path)?;
    let (manifest, clamped) = raw.validated()?;
    if clamped > 0 {
        log::warn!("{}: clamped {clamped} box(es) to image bounds", path.display());
    }
    Ok(LoadedManifest { manifest, clamped })
}

pub fn write_manifest(m: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    write_canonical_json(&canonical_manifest(m), path)
}

/// Copy of `m` with images sorted by id, annotations by (image id, id) and
/// categories by id.
pub fn canonical_manifest(m: &DatasetManifest) -> DatasetManifest {
    let mut out = m.clone();
    out.images.sort_by_key(|i| i.id);
    out.annotations.sort_by_key(|a| (a.image_id, a.id));
    out.categories.sort_by_key(|c| c.id);
    out
}

/// Detector output loaded from a results file.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    pub records: Vec<DetectionRecord>,
    pub source: PathBuf,
    pub categories: Vec<Category>,
}

#[derive(Deserialize)]
struct RawDetection {
    image_id: u64,
    category_id: u32,
    bbox: [f64; 4],
    score: f64,
}

/// Load a results-style JSON array. Records are validated one by one and
/// the first failure is reported with its array index.
pub fn load_detections(path: impl AsRef<Path>, categories: &[Category]) -> Result<DetectionSet> {
    let path = path.as_ref();
    let entries: Vec<serde_json::Value> = read_json(path)?;
    let records = entries
        .into_iter()
        .enumerate()
        .map(|(index, value)| parse_detection(index, value, categories))
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionSet {
        records,
        source: path.to_path_buf(),
        categories: categories.to_vec(),
    })
}

fn parse_detection(
    index: usize,
    value: serde_json::Value,
    categories: &[Category],
) -> Result<DetectionRecord> {
    let bad = |reason: String| Error::InvalidDetection { index, reason };
    let raw: RawDetection = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
    if !(0.0..=1.0).contains(&raw.score) {
        return Err(bad(format!("score {} outside [0, 1]", raw.score)));
    }
    if !categories.iter().any(|c| c.id == raw.category_id) {
        return Err(bad(format!("unknown category id {}", raw.category_id)));
    }
    let bbox = BoundBox::from_xywh(raw.bbox).map_err(|e| bad(e.to_string()))?;
    Ok(DetectionRecord {
        image_id: raw.image_id,
        category_id: raw.category_id,
        bbox,
        score: raw.score,
    })
}

pub fn write_detections(records: &[DetectionRecord], path: impl AsRef<Path>) -> Result<()> {
    write_canonical_json(&records, path)
}

pub fn load_pool(path: impl AsRef<Path>) -> Result<BackgroundPool> {
    let pool: BackgroundPool = read_json(path.as_ref())?;
    pool.check_unique()?;
    Ok(pool)
}

pub fn write_pool(pool: &BackgroundPool, path: impl AsRef<Path>) -> Result<()> {
    write_canonical_json(pool, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    #[default]
    Png,
    Jpeg,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Jpeg => "jpg",
        }
    }
}

impl std::str::FromStr for ImageFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "png" => Ok(ImageFormat::Png),
            "jpg" | "jpeg" => Ok(ImageFormat::Jpeg),
            other => Err(format!("unknown image format `{other}` (expected png or jpeg)")),
        }
    }
}

const JPEG_QUALITY: u8 = 95;

/// Decode a PNG or JPEG file into RGB. Grayscale is promoted and alpha
/// dropped.
pub fn decode_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image_bytes(&bytes, path)
}

/// Decode from memory; `path` is only used in error messages.
pub fn decode_image_bytes(bytes: &[u8], path: &Path) -> Result<ImageBuffer> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Jpeg) => {}
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    }
    let decoded = reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let rgb = decoded.into_rgb8();
    let (w, h) = rgb.dimensions();
    ImageBuffer::new(w, h, rgb.into_raw())
}

pub fn encode_image_bytes(img: &ImageBuffer, format: ImageFormat) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let (w, h) = img.dimensions();
    let res = match format {
        ImageFormat::Png => PngEncoder::new(&mut out).write_image(img.data(), w, h, ExtendedColorType::Rgb8),
        ImageFormat::Jpeg => JpegEncoder::new_with_quality(&mut out, JPEG_QUALITY).write_image(
            img.data(),
            w,
            h,
            ExtendedColorType::Rgb8,
        ),
    };
    res.map_err(|e| Error::Encode {
        path: PathBuf::from(format!("<memory>.{}", format.extension())),
        reason: e.to_string(),
    })?;
    Ok(out)
}

pub fn encode_image(img: &ImageBuffer, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_image_bytes(img, format).map_err(|e| match e {
        Error::Encode { reason, .. } => Error::Encode {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(bytes_digest(&bytes))
}

pub fn bytes_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Canonical JSON bytes: sorted keys, pretty-printed, trailing newline.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    // Round-trip through `Value` so map keys come out sorted regardless of
    // struct field order.
    let value = serde_json::to_value(value).expect("serializable value");
    let mut out = serde_json::to_vec_pretty(&sorted(value)).expect("serializable value");
    out.push(b'\n');
    out
}

fn sorted(value: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            let mut entries: Vec<_> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sorted(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sorted).collect()),
        other => other,
    }
}

pub fn write_canonical_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&canonical_json(value))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
