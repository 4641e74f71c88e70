use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bgmix_core::curation::{curate_backgrounds, FrameRef, DEFAULT_BG_CATEGORIES, DEFAULT_BG_THRESHOLD};
use bgmix_core::io;
use bgmix_core::Category;
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{self, required};
use crate::CliError;

pub const POOL_FILE: &str = "pool.json";

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CurateArgs {
    /// Frame directory (ids = 1-based position in name order) or a
    /// COCO-style manifest listing the frames.
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Detector output on the frames (results-style JSON array).
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Detections scoring at least this much disqualify a frame.
    #[arg(long)]
    pub bg_threshold: Option<f64>,
    /// Category ids that disqualify a frame.
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<u32>>,
    /// Keep only every Nth frame (by position) before filtering.
    #[arg(long)]
    pub every_nth: Option<usize>,
    /// Free-form description of the frame source recorded in the pool.
    #[arg(long)]
    pub source: Option<String>,
    /// Output directory for pool.json and the config echo.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// JSON file supplying any of the flags above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn is_image(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

/// (path, id) pairs in id order.
fn list_frames(frames: &Path) -> anyhow::Result<Vec<(String, u64)>> {
    if frames.is_dir() {
        let mut names: Vec<PathBuf> = fs::read_dir(frames)
            .with_context(|| format!("reading {}", frames.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        names.retain(|p| p.is_file() && is_image(p));
        names.sort();
        Ok(names
            .into_iter()
            .enumerate()
            .map(|(i, p)| (p.to_string_lossy().into_owned(), i as u64 + 1))
            .collect())
    } else if frames.is_file() {
        let m = io::load_manifest(frames)?.manifest;
        let root = frames.parent().unwrap_or(Path::new(""));
        let mut images = m.images;
        images.sort_by_key(|i| i.id);
        Ok(images
            .into_iter()
            .map(|i| (root.join(&i.file_name).to_string_lossy().into_owned(), i.id))
            .collect())
    } else {
        bail!("frames path {} does not exist", frames.display())
    }
}

pub fn run(cli: &CurateArgs) -> Result<(), CliError> {
    let mut args: CurateArgs = config::merge(cli, cli.config.as_deref(), "curate")?;
    let frames_path = required(&args.frames, "frames")?;
    let detections_path = required(&args.detections, "detections")?;
    let out = required(&args.out, "out")?;
    let threshold = *args.bg_threshold.get_or_insert(DEFAULT_BG_THRESHOLD);
    let categories = args.categories.get_or_insert_with(|| DEFAULT_BG_CATEGORIES.to_vec()).clone();
    let every_nth = *args.every_nth.get_or_insert(1);
    let source = args
        .source
        .get_or_insert_with(|| detections_path.to_string_lossy().into_owned())
        .clone();
    if every_nth == 0 {
        return Err(CliError::Usage("--every-nth must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Usage(format!("--bg-threshold {threshold} outside [0, 1]")));
    }

    if !detections_path.is_file() {
        return Err(anyhow::anyhow!("detections file {} not found", detections_path.display()).into());
    }
    let detections = io::load_detections(&detections_path, &Category::canonical())?;
    let listed: Vec<(String, u64)> = list_frames(&frames_path)?
        .into_iter()
        .enumerate()
        .filter(|(i, _)| i % every_nth == 0)
        .map(|(_, f)| f)
        .collect();

    let workers = args.workers.unwrap_or_else(default_workers);
    let frames: Vec<FrameRef> = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?
        .install(|| {
            listed
                .par_iter()
                .map(|(path, id)| {
                    Ok(FrameRef {
                        digest: io::file_digest(path)?,
                        path: path.clone(),
                        image_id: *id,
                    })
                })
                .collect::<bgmix_core::Result<Vec<_>>>()
        })?;

    let outcome = curate_backgrounds(&frames, &detections.records, threshold, &categories, &source)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    io::write_pool(&outcome.pool, out.join(POOL_FILE))?;
    config::write_echo(&args, "curate", &out)?;

    let names: BTreeMap<u32, String> = Category::canonical().into_iter().map(|c| (c.id, c.name)).collect();
    println!("frames in:   {}", outcome.frames_in);
    println!("frames kept: {}", outcome.pool.len());
    println!("rejected by category:");
    for c in &categories {
        let n = outcome.rejected_by_category.get(c).copied().unwrap_or(0);
        let name = names.get(c).map(String::as_str).unwrap_or("?");
        println!("  {c:>3} {name:<14} {n}");
    }
    if outcome.unknown_detections > 0 {
        println!("ignored {} detection(s) on unlisted frames", outcome.unknown_detections);
    }
    if outcome.empty_pool {
        log::warn!("background pool is empty");
        println!("warning: background pool is empty");
    }
    println!("wrote {}", out.join(POOL_FILE).display());
    Ok(())
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
