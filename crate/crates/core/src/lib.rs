//! Background Mixup for hand-object detection datasets.
//!
//! Building blocks:
//!
//! - [`curation`]: select foreground-free frames from detector output to
//!   form a background pool.
//! - [`mix`]: blend training images with backgrounds (Background Mixup),
//!   with other training images (Mixup) or with external images (Mixup_K).
//! - [`augment`]: deterministic, parallel whole-dataset augmentation.
//! - [`eval`]: AP, mAP and thresholded precision for hands and
//!   objects-in-contact.
//! - [`io`]: COCO-style manifests, detection files, pool manifests, images.

pub mod augment;
pub mod curation;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod io;
pub mod mix;
pub mod model;
pub mod overlay;

pub use curation::{curate_backgrounds, sample_background, BackgroundPool, DetectionRecord, FrameRef};
pub use error::{Error, Result};
pub use eval::{average_precision, evaluate, match_predictions, precision_at_threshold, EvalConfig, EvalReport};
pub use io::{DetectionSet, ImageFormat};
pub use mix::{blend_images, resize_to_match, sample_lambda, AugmentedSample, LabeledSample, MixConfig, MixMode};
pub use model::{box_area, iou, Annotation, BoundBox, Category, DatasetManifest, ImageBuffer, ImageEntry};
