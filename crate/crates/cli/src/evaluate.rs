use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use bgmix_core::eval::{evaluate, render_table, EvalConfig, Interpolation, DEFAULT_CONF_THRESH, DEFAULT_IOU_THRESH};
use bgmix_core::io;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{self, required};
use crate::CliError;

pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "table.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationArg {
    AllPoint,
    Voc11,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct EvaluateArgs {
    /// Predictions (results-style JSON array).
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Ground-truth manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub iou_thresh: Option<f64>,
    /// Confidence cutoff for the precision column.
    #[arg(long)]
    pub conf_thresh: Option<f64>,
    #[arg(long, value_enum)]
    pub interpolation: Option<InterpolationArg>,
    /// Category ids to report (default: hand and targetobject).
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<u32>>,
    /// Directory for report.json, table.txt and the config echo. Without it
    /// the report is printed only.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn run(cli: &EvaluateArgs) -> Result<(), CliError> {
    let mut args: EvaluateArgs = config::merge(cli, cli.config.as_deref(), "evaluate")?;
    let detections = required(&args.detections, "detections")?;
    let manifest = required(&args.manifest, "manifest")?;
    let defaults = EvalConfig::default();
    let cfg = EvalConfig {
        iou_thresh: *args.iou_thresh.get_or_insert(DEFAULT_IOU_THRESH),
        conf_thresh: *args.conf_thresh.get_or_insert(DEFAULT_CONF_THRESH),
        interpolation: match *args.interpolation.get_or_insert(InterpolationArg::AllPoint) {
            InterpolationArg::AllPoint => Interpolation::AllPoint,
            InterpolationArg::Voc11 => Interpolation::Voc11,
        },
        categories: args.categories.get_or_insert(defaults.categories).clone(),
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let gt = io::load_manifest(&manifest)?.manifest;
    let preds = io::load_detections(&detections, &gt.categories)?;
    let report = evaluate(&preds.records, &gt, &cfg)?;
    let table = render_table(&report);

    match &args.out {
        Some(out) => {
            fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            io::write_canonical_json(&report, out.join(REPORT_FILE))?;
            fs::write(out.join(TABLE_FILE), &table).with_context(|| format!("writing {}", out.display()))?;
            config::write_echo(&args, "evaluate", out)?;
            print!("{table}");
            println!("wrote {}", out.display());
        }
        None => {
            print!("{table}");
            println!("{}", String::from_utf8_lossy(&io::canonical_json(&report)).trim_end());
        }
    }
    Ok(())
}
