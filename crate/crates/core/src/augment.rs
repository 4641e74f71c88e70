//! Whole-dataset augmentation driver.
//!
//! Output `i` (in source-id order, `multiplicity` copies per source image)
//! draws all of its randomness from `sample_rng(master_seed, i)`, and writes
//! a file whose name depends only on `i` and the source file name. The
//! produced tree is therefore identical for any worker count.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curation::BackgroundPool;
use crate::error::{Error, Result};
use crate::io::{self, ImageFormat};
use crate::mix::{
    self, background_mixup, mixup_external, mixup_pair, sample_rng, sample_seed, ImageSource, LabeledSample,
    MixConfig, MixMode, Provenance,
};
use crate::model::{Annotation, DatasetManifest, ImageEntry};

pub const IMAGES_DIR: &str = "images";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROVENANCE_FILE: &str = "provenance.json";

/// Where the second image of each blend comes from.
#[derive(Debug, Clone, Copy)]
pub enum Partner<'a> {
    Backgrounds(&'a BackgroundPool),
    WithinDataset,
    /// Paths of unlabeled external images, already sorted.
    External(&'a [String]),
}

impl Partner<'_> {
    fn mode(&self) -> MixMode {
        match self {
            Partner::Backgrounds(_) => MixMode::BackgroundMixup,
            Partner::WithinDataset => MixMode::Mixup,
            Partner::External(_) => MixMode::MixupExternal,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AugmentOptions {
    pub multiplicity: usize,
    pub workers: usize,
    pub format: ImageFormat,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            multiplicity: 1,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            format: ImageFormat::Png,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageProvenance {
    pub id: u64,
    pub file_name: String,
    #[serde(flatten)]
    pub provenance: Provenance,
}

/// Provenance sidecar for one augmentation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub mode: MixMode,
    pub alpha: f64,
    pub beta: f64,
    pub master_seed: u64,
    pub lambda_override: Option<f64>,
    pub multiplicity: usize,
    pub images: Vec<ImageProvenance>,
}

#[derive(Debug, Clone)]
pub struct AugmentRun {
    pub manifest: DatasetManifest,
    pub provenance: RunProvenance,
}

impl AugmentRun {
    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.provenance.images.iter().map(|p| p.provenance.lambda)
    }
}

struct Output {
    entry: ImageEntry,
    annotations: Vec<Annotation>,
    provenance: Provenance,
}

/// Augment every image of `manifest` (files under `image_root`) and write
/// `images/`, `manifest.json` and `provenance.json` into `out_dir`.
pub fn augment_dataset(
    manifest: &DatasetManifest,
    image_root: &Path,
    partner: Partner<'_>,
    cfg: &MixConfig,
    opts: &AugmentOptions,
    source: &dyn ImageSource,
    out_dir: &Path,
) -> Result<AugmentRun> {
    cfg.validate()?;
    if cfg.mode != partner.mode() {
        return Err(Error::InvalidConfig(format!(
            "mode {} does not match the supplied partner source",
            cfg.mode
        )));
    }
    if opts.multiplicity == 0 {
        return Err(Error::InvalidConfig("multiplicity must be at least 1".into()));
    }
    match partner {
        Partner::Backgrounds(pool) if pool.is_empty() => return Err(Error::EmptyPool),
        Partner::WithinDataset if manifest.images.len() < 2 => {
            return Err(Error::InvalidConfig("mixup needs at least two images".into()))
        }
        Partner::External([]) => {
            return Err(Error::InvalidConfig("no external images given".into()))
        }
        _ => {}
    }

    let canonical = io::canonical_manifest(manifest);
    let images_dir = out_dir.join(IMAGES_DIR);
    fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;

    let total = canonical.images.len() * opts.multiplicity;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let ctx = Context {
        manifest: &canonical,
        image_root,
        partner,
        cfg,
        opts,
        source,
        images_dir: &images_dir,
    };
    let outputs: Vec<Output> = pool.install(|| {
        use rayon::prelude::*;
        (0..total).into_par_iter().map(|i| ctx.produce(i)).collect::<Result<_>>()
    })?;

    let mut images = Vec::with_capacity(total);
    let mut annotations = Vec::new();
    let mut records = Vec::with_capacity(total);
    for out in outputs {
        for mut ann in out.annotations {
            ann.id = annotations.len() as u64 + 1;
            ann.image_id = out.entry.id;
            annotations.push(ann);
        }
        records.push(ImageProvenance {
            id: out.entry.id,
            file_name: out.entry.file_name.clone(),
            provenance: out.provenance,
        });
        images.push(out.entry);
    }
    let out_manifest = DatasetManifest {
        images,
        annotations,
        categories: canonical.categories.clone(),
    };
    let provenance = RunProvenance {
        mode: cfg.mode,
        alpha: cfg.alpha,
        beta: cfg.beta,
        master_seed: cfg.master_seed,
        lambda_override: cfg.lambda_override,
        multiplicity: opts.multiplicity,
        images: records,
    };
    io::write_manifest(&out_manifest, out_dir.join(MANIFEST_FILE))?;
    io::write_canonical_json(&provenance, out_dir.join(PROVENANCE_FILE))?;
    Ok(AugmentRun {
        manifest: out_manifest,
        provenance,
    })
}

struct Context<'a> {
    manifest: &'a DatasetManifest,
    image_root: &'a Path,
    partner: Partner<'a>,
    cfg: &'a MixConfig,
    opts: &'a AugmentOptions,
    source: &'a dyn ImageSource,
    images_dir: &'a Path,
}

impl Context<'_> {
    fn load_sample(&self, pos: usize) -> Result<LabeledSample> {
        let entry = &self.manifest.images[pos];
        let path = self.image_root.join(&entry.file_name);
        let image = io::decode_image(&path)?;
        if image.dimensions() != (entry.width, entry.height) {
            return Err(Error::SchemaMismatch(format!(
                "{} is {}x{} but the manifest says {}x{}",
                path.display(),
                image.width(),
                image.height(),
                entry.width,
                entry.height
            )));
        }
        Ok(LabeledSample {
            image_id: entry.id,
            image,
            annotations: self.manifest.annotations_for(entry.id).cloned().collect(),
        })
    }

    fn produce(&self, index: usize) -> Result<Output> {
        let pos = index / self.opts.multiplicity;
        let sample = self.load_sample(pos)?;
        let mut rng = sample_rng(self.cfg.master_seed, index as u64);
        let mut aug = match self.partner {
            Partner::Backgrounds(pool) => background_mixup(&sample, pool, self.source, self.cfg, &mut rng)?,
            Partner::WithinDataset => {
                // uniform over the other images
                let n = self.manifest.images.len();
                let mut other = rng.random_range(0..n - 1);
                if other >= pos {
                    other += 1;
                }
                let partner = self.load_sample(other)?;
                mixup_pair(&sample, &partner, self.cfg, &mut rng)?
            }
            Partner::External(paths) => {
                let (path, ext) = mix::draw_decodable(
                    &mut rng,
                    |r| Ok(paths[r.random_range(0..paths.len())].clone()),
                    self.source,
                )?;
                mixup_external(&sample, &ext, &path, self.cfg, &mut rng)?
            }
        };
        aug.provenance.seed = Some(sample_seed(self.cfg.master_seed, index as u64));

        let id = index as u64 + 1;
        let src_name = &self.manifest.images[pos].file_name;
        let stem = Path::new(src_name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into());
        let file_name = format!("{id:06}_{stem}.{}", self.opts.format.extension());
        let path: PathBuf = self.images_dir.join(&file_name);
        io::encode_image(&aug.image, &path, self.opts.format)?;
        Ok(Output {
            entry: ImageEntry {
                id,
                file_name,
                width: aug.image.width(),
                height: aug.image.height(),
            },
            annotations: aug.annotations,
            provenance: aug.provenance,
        })
    }
}
