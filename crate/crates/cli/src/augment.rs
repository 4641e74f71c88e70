use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use bgmix_core::augment::{augment_dataset, AugmentOptions, Partner};
use bgmix_core::io::{self, ImageFormat};
use bgmix_core::mix::FsImageSource;
use bgmix_core::{MixConfig, MixMode};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{self, required};
use crate::curate::default_workers;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    BgMixup,
    Mixup,
    MixupExternal,
}

impl From<ModeArg> for MixMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::BgMixup => MixMode::BackgroundMixup,
            ModeArg::Mixup => MixMode::Mixup,
            ModeArg::MixupExternal => MixMode::MixupExternal,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct AugmentArgs {
    /// COCO-style manifest of the training images.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory the manifest's file names are relative to.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Background pool manifest (bg-mixup).
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Directory of unlabeled external images (mixup-external).
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Beta distribution shape α.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Beta distribution shape β.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fixed mixing coefficient instead of sampling.
    #[arg(long = "lambda")]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Augmented copies per input image.
    #[arg(long)]
    pub multiplicity: Option<usize>,
    #[arg(long)]
    pub format: Option<ImageFormat>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn list_images(dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut paths: Vec<String> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
                    Some("png" | "jpg" | "jpeg")
                )
        })
        .map(|p| p.to_string_lossy().into_owned())
        .collect();
    paths.sort();
    Ok(paths)
}

/// Ten equal-width bins over [0, 1].
pub fn lambda_histogram(lambdas: impl Iterator<Item = f64>) -> [usize; 10] {
    let mut bins = [0; 10];
    for l in lambdas {
        bins[((l * 10.0) as usize).min(9)] += 1;
    }
    bins
}

pub fn run(cli: &AugmentArgs) -> Result<(), CliError> {
    let mut args: AugmentArgs = config::merge(cli, cli.config.as_deref(), "augment")?;
    let manifest_path = required(&args.manifest, "manifest")?;
    let images = required(&args.images, "images")?;
    let mode = required(&args.mode, "mode")?;
    let out = required(&args.out, "out")?;
    let cfg = MixConfig {
        alpha: *args.alpha.get_or_insert(1.0),
        beta: *args.beta.get_or_insert(1.0),
        mode: mode.into(),
        master_seed: *args.seed.get_or_insert(0),
        lambda_override: args.lambda,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = AugmentOptions {
        multiplicity: *args.multiplicity.get_or_insert(1),
        workers: args.workers.unwrap_or_else(default_workers),
        format: *args.format.get_or_insert(ImageFormat::Png),
    };

    let manifest = io::load_manifest(&manifest_path)?.manifest;
    let pool;
    let externals;
    let partner = match mode {
        ModeArg::BgMixup => {
            let path = required(&args.pool, "pool")?;
            pool = io::load_pool(&path)?;
            if pool.is_empty() {
                return Err(anyhow::anyhow!("background pool {} is empty", path.display()).into());
            }
            Partner::Backgrounds(&pool)
        }
        ModeArg::Mixup => Partner::WithinDataset,
        ModeArg::MixupExternal => {
            let dir = required(&args.external, "external")?;
            externals = list_images(&dir)?;
            Partner::External(&externals)
        }
    };

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let run = augment_dataset(&manifest, &images, partner, &cfg, &opts, &FsImageSource, &out)?;
    config::write_echo(&args, "augment", &out)?;

    println!(
        "{} -> {} images, {} annotations ({})",
        manifest.images.len(),
        run.manifest.images.len(),
        run.manifest.annotations.len(),
        cfg.mode
    );
    println!("lambda histogram:");
    let bins = lambda_histogram(run.lambdas());
    let peak = bins.iter().copied().max().unwrap_or(0).max(1);
    for (i, n) in bins.iter().enumerate() {
        let bar = "#".repeat((n * 40).div_ceil(peak));
        println!("  [{:.1}, {:.1}{} {n:>6} {bar}", i as f64 / 10.0, (i + 1) as f64 / 10.0, if i == 9 { "]" } else { ")" });
    }
    println!("wrote {}", out.display());
    Ok(())
}
