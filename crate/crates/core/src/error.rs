use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box ({x}, {y}, {w}, {h}): {reason}")]
    InvalidBox {
        x: f64,
        y: f64,
        w: f64,
        h: f64,
        reason: &'static str,
    },

    #[error("invalid image buffer: {0}")]
    InvalidImage(String),

    #[error("image dimensions differ: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: u32,
        left_h: u32,
        right_w: u32,
        right_h: u32,
    },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("annotation {annotation_id} references unknown image id {image_id}")]
    DanglingImageId { annotation_id: u64, image_id: u64 },

    #[error("duplicate image id {0}")]
    DuplicateImageId(u64),

    #[error("annotation {annotation_id} lies entirely outside image {image_id}")]
    BoxOutsideImage { annotation_id: u64, image_id: u64 },

    #[error("detection record {index}: {reason}")]
    InvalidDetection { index: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no frames given for curation")]
    NoFrames,

    #[error("background pool is empty")]
    EmptyPool,

    #[error("category mismatch: {0}")]
    CategoryMismatch(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("mixup needs two distinct images, got image id {0} twice")]
    SameImage(u64),

    #[error("gave up after {attempts} undecodable images, last: {last}")]
    RetriesExhausted { attempts: usize, last: String },

    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("failed to encode {path}: {reason}")]
    Encode { path: PathBuf, reason: String },

    #[error("unsupported image format for {0}")]
    UnsupportedFormat(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
