//! Background pool construction.
//!
//! A frame is a background iff the hand-object detector reported no hand
//! and no object-in-contact on it at or above the confidence threshold.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundBox, HAND, TARGET_OBJECT};

pub const DEFAULT_BG_THRESHOLD: f64 = 0.1;
pub const DEFAULT_BG_CATEGORIES: [u32; 2] = [HAND, TARGET_OBJECT];

/// One prediction from an external detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: u64,
    pub category_id: u32,
    pub bbox: BoundBox,
    pub score: f64,
}

/// Candidate frame for the pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRef {
    pub path: String,
    pub image_id: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub path: String,
    pub source_id: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationInfo {
    pub threshold: f64,
    pub categories: Vec<u32>,
    pub source: String,
}

/// Foreground-free images available for Background Mixup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundPool {
    pub entries: Vec<PoolEntry>,
    pub curation: CurationInfo,
}

impl BackgroundPool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn check_unique(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.path.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate pool entry {}", e.path)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurationOutcome {
    pub pool: BackgroundPool,
    pub frames_in: usize,
    /// Set when no frame survived the filter.
    pub empty_pool: bool,
    /// Detections whose image id matches no listed frame.
    pub unknown_detections: usize,
    /// Rejected frames per category id. A frame rejected for several
    /// categories is counted once under each.
    pub rejected_by_category: BTreeMap<u32, usize>,
}

/// Keep exactly the frames with no detection of a listed category scoring
/// at least `threshold`. Entries come out sorted by path.
pub fn curate_backgrounds(
    frames: &[FrameRef],
    detections: &[DetectionRecord],
    threshold: f64,
    categories: &[u32],
    source: &str,
) -> Result<CurationOutcome> {
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!(
            "background threshold {threshold} outside [0, 1]"
        )));
    }
    let mut by_id: HashMap<u64, usize> = HashMap::with_capacity(frames.len());
    let mut paths = HashSet::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        if !paths.insert(f.path.as_str()) {
            return Err(Error::InvalidConfig(format!("frame {} listed twice", f.path)));
        }
        if by_id.insert(f.image_id, i).is_some() {
            return Err(Error::InvalidConfig(format!("frame id {} listed twice", f.image_id)));
        }
    }

    let wanted: HashSet<u32> = categories.iter().copied().collect();
    // hits[frame][category] for frames with at least one disqualifying record
    let mut hits: HashMap<usize, HashSet<u32>> = HashMap::new();
    let mut unknown_detections = 0;
    for d in detections {
        let Some(&idx) = by_id.get(&d.image_id) else {
            unknown_detections += 1;
            continue;
        };
        if wanted.contains(&d.category_id) && d.score >= threshold {
            hits.entry(idx).or_default().insert(d.category_id);
        }
    }
    if unknown_detections > 0 {
        log::warn!("ignored {unknown_detections} detection(s) on unlisted frames");
    }

    let mut rejected_by_category = BTreeMap::new();
    for cats in hits.values() {
        for &c in cats {
            *rejected_by_category.entry(c).or_insert(0) += 1;
        }
    }

    let mut entries: Vec<PoolEntry> = frames
        .iter()
        .enumerate()
        .filter(|(i, _)| !hits.contains_key(i))
        .map(|(_, f)| PoolEntry {
            path: f.path.clone(),
            source_id: f.image_id,
            digest: f.digest.clone(),
        })
        .collect();
    entries.sort_by(|a, b| a.path.cmp(&b.path));

    let mut categories: Vec<u32> = wanted.into_iter().collect();
    categories.sort_unstable();
    let empty_pool = entries.is_empty();
    if empty_pool {
        log::warn!("background pool is empty after filtering {} frame(s)", frames.len());
    }
    Ok(CurationOutcome {
        pool: BackgroundPool {
            entries,
            curation: CurationInfo {
                threshold,
                categories,
                source: source.to_string(),
            },
        },
        frames_in: frames.len(),
        empty_pool,
        unknown_detections,
        rejected_by_category,
    })
}

/// Uniform draw over pool entries.
pub fn sample_background<'a, R: Rng + ?Sized>(
    pool: &'a BackgroundPool,
    rng: &mut R,
) -> Result<&'a PoolEntry> {
    if pool.entries.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(&pool.entries[rng.random_range(0..pool.entries.len())])
}
