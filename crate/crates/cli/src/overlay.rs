use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bgmix_core::io::{self, ImageFormat};
use bgmix_core::overlay::render_overlay;
use bgmix_core::DetectionRecord;
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{self, required};
use crate::CliError;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct OverlayArgs {
    /// Manifest naming the images (and holding the ground truth).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Predictions to draw.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Only predictions scoring at least this much are drawn.
    #[arg(long)]
    pub conf_thresh: Option<f64>,
    #[arg(long)]
    pub thickness: Option<u32>,
    /// Do not draw ground-truth boxes.
    #[arg(long)]
    #[serde(default)]
    pub no_gt: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn run(cli: &OverlayArgs) -> Result<(), CliError> {
    let mut args: OverlayArgs = config::merge(cli, cli.config.as_deref(), "overlay")?;
    let manifest_path = required(&args.manifest, "manifest")?;
    let images = required(&args.images, "images")?;
    let out = required(&args.out, "out")?;
    let conf = *args.conf_thresh.get_or_insert(0.1);
    let thickness = *args.thickness.get_or_insert(1);
    if !(0.0..=1.0).contains(&conf) {
        return Err(CliError::Usage(format!("--conf-thresh {conf} outside [0, 1]")));
    }

    let m = io::load_manifest(&manifest_path)?.manifest;
    let preds: Vec<DetectionRecord> = match &args.detections {
        Some(p) => io::load_detections(p, &m.categories)?.records,
        None => Vec::new(),
    };
    for img in &m.images {
        let p = images.join(&img.file_name);
        if !p.is_file() {
            bail_missing(&p)?;
        }
    }

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut drawn = 0;
    for entry in &m.images {
        let img = io::decode_image(images.join(&entry.file_name))?;
        let gt: Vec<_> = if args.no_gt {
            Vec::new()
        } else {
            m.annotations_for(entry.id).collect()
        };
        let dets: Vec<_> = preds.iter().filter(|d| d.image_id == entry.id).collect();
        drawn += dets.iter().filter(|d| d.score >= conf).count();
        let rendered = render_overlay(&img, &gt, &dets, conf, thickness);
        let stem = Path::new(&entry.file_name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| entry.id.to_string());
        io::encode_image(&rendered, out.join(format!("{stem}.png")), ImageFormat::Png)?;
    }
    config::write_echo(&args, "overlay", &out)?;
    println!(
        "drew {} image(s), {drawn} prediction(s) at confidence >= {conf}",
        m.images.len()
    );
    Ok(())
}

fn bail_missing(p: &Path) -> anyhow::Result<()> {
    bail!("image {} not found", p.display())
}
