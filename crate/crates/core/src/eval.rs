//! Detection scoring: greedy IoU matching, per-category average precision,
//! mAP and precision at a confidence cutoff.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::curation::DetectionRecord;
use crate::error::{Error, Result};
use crate::model::{iou, BoundBox, DatasetManifest, HAND, TARGET_OBJECT};

pub const DEFAULT_IOU_THRESH: f64 = 0.5;
pub const DEFAULT_CONF_THRESH: f64 = 0.1;
pub const ZERO_GT_POLICY: &str = "ap=1 when a category has no ground truth and no predictions, 0 otherwise";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Area under the monotone precision envelope at every recall step.
    #[default]
    AllPoint,
    /// PASCAL VOC 2007: mean envelope precision at recall 0, 0.1, ..., 1.
    Voc11,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_thresh: f64,
    pub conf_thresh: f64,
    pub interpolation: Interpolation,
    pub categories: Vec<u32>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_thresh: DEFAULT_IOU_THRESH,
            conf_thresh: DEFAULT_CONF_THRESH,
            interpolation: Interpolation::AllPoint,
            categories: vec![HAND, TARGET_OBJECT],
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_thresh > 0.0 && self.iou_thresh <= 1.0) {
            return Err(Error::InvalidConfig(format!("IoU threshold {} outside (0, 1]", self.iou_thresh)));
        }
        if !(0.0..=1.0).contains(&self.conf_thresh) {
            return Err(Error::InvalidConfig(format!(
                "confidence threshold {} outside [0, 1]",
                self.conf_thresh
            )));
        }
        if self.categories.is_empty() {
            return Err(Error::InvalidConfig("no categories to evaluate".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPrediction {
    pub score: f64,
    pub image_id: u64,
    pub bbox: BoundBox,
    pub true_positive: bool,
    pub gt_id: Option<u64>,
}

/// Predictions of one category in evaluation order, with their match
/// outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub category: u32,
    pub predictions: Vec<MatchedPrediction>,
    pub gt_count: usize,
}

impl MatchResult {
    /// (TP, FP) among predictions scoring at least `conf_thresh`.
    pub fn counts_at(&self, conf_thresh: f64) -> (usize, usize) {
        self.predictions
            .iter()
            .filter(|p| p.score >= conf_thresh)
            .fold((0, 0), |(tp, fp), p| if p.true_positive { (tp + 1, fp) } else { (tp, fp + 1) })
    }

    /// TP / (TP + FP) above the cutoff; `None` when nothing survives.
    pub fn precision_at(&self, conf_thresh: f64) -> Option<f64> {
        let (tp, fp) = self.counts_at(conf_thresh);
        (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64)
    }
}

/// Evaluation order: score descending, then image id, then box coordinates.
fn prediction_order(a: &DetectionRecord, b: &DetectionRecord) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.image_id.cmp(&b.image_id))
        .then_with(|| {
            a.bbox
                .to_xywh()
                .iter()
                .zip(b.bbox.to_xywh().iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Greedily match each prediction, in evaluation order, to the unmatched
/// ground truth of the same image with the highest IoU, provided that IoU
/// reaches `iou_thresh`. Predictions of other categories are ignored.
pub fn match_predictions(
    preds: &[DetectionRecord],
    gt: &DatasetManifest,
    category: u32,
    iou_thresh: f64,
) -> MatchResult {
    let mut sorted: Vec<&DetectionRecord> = preds.iter().filter(|p| p.category_id == category).collect();
    sorted.sort_by(|a, b| prediction_order(a, b));

    let mut by_image: HashMap<u64, Vec<(u64, BoundBox, bool)>> = HashMap::new();
    let mut gt_count = 0;
    for a in gt.annotations.iter().filter(|a| a.category_id == category) {
        by_image.entry(a.image_id).or_default().push((a.id, a.bbox, false));
        gt_count += 1;
    }
    for boxes in by_image.values_mut() {
        boxes.sort_by_key(|b| b.0);
    }

    let predictions = sorted
        .into_iter()
        .map(|p| {
            let mut best: Option<(usize, f64)> = None;
            if let Some(cands) = by_image.get(&p.image_id) {
                for (i, (_, b, used)) in cands.iter().enumerate() {
                    if *used {
                        continue;
                    }
                    let o = iou(&p.bbox, b);
                    if o >= iou_thresh && best.is_none_or(|(_, bo)| o > bo) {
                        best = Some((i, o));
                    }
                }
            }
            let gt_id = best.map(|(i, _)| {
                let cand = &mut by_image.get_mut(&p.image_id).expect("candidate image")[i];
                cand.2 = true;
                cand.0
            });
            MatchedPrediction {
                score: p.score,
                image_id: p.image_id,
                bbox: p.bbox,
                true_positive: gt_id.is_some(),
                gt_id,
            }
        })
        .collect();

    MatchResult {
        category,
        predictions,
        gt_count,
    }
}

/// All-point interpolated AP.
pub fn average_precision(m: &MatchResult) -> f64 {
    average_precision_with(m, Interpolation::AllPoint)
}

pub fn average_precision_with(m: &MatchResult, interpolation: Interpolation) -> f64 {
    if m.gt_count == 0 {
        return if m.predictions.is_empty() { 1.0 } else { 0.0 };
    }
    let g = m.gt_count as f64;
    let mut recall = Vec::with_capacity(m.predictions.len());
    let mut precision = Vec::with_capacity(m.predictions.len());
    let mut tp = 0usize;
    for (k, p) in m.predictions.iter().enumerate() {
        tp += p.true_positive as usize;
        recall.push(tp as f64 / g);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    // envelope: best precision achievable at this recall or beyond
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    match interpolation {
        Interpolation::AllPoint => {
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for (r, p) in recall.iter().zip(&precision) {
                if *r > prev_recall {
                    ap += (r - prev_recall) * p;
                    prev_recall = *r;
                }
            }
            ap
        }
        Interpolation::Voc11 => {
            (0..=10)
                .map(|t| {
                    let t = t as f64 / 10.0;
                    recall
                        .iter()
                        .zip(&precision)
                        .filter(|(r, _)| **r >= t)
                        .map(|(_, p)| *p)
                        .fold(0.0, f64::max)
                })
                .sum::<f64>()
                / 11.0
        }
    }
}

/// Precision among predictions of `category` scoring at least `conf_thresh`.
/// `None` when no prediction clears the cutoff.
pub fn precision_at_threshold(
    preds: &[DetectionRecord],
    gt: &DatasetManifest,
    category: u32,
    conf_thresh: f64,
    iou_thresh: f64,
) -> Option<f64> {
    match_predictions(preds, gt, category, iou_thresh).precision_at(conf_thresh)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category_id: u32,
    pub ap: f64,
    /// `null` when no prediction clears the confidence threshold.
    pub precision: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub gt: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub iou_thresh: f64,
    pub conf_thresh: f64,
    pub interpolation: Interpolation,
    pub categories: Vec<u32>,
    pub zero_gt_policy: String,
    pub counts: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Keyed by category name.
    pub per_category: BTreeMap<String, CategoryReport>,
    pub map: f64,
    pub config: ReportConfig,
}

pub fn evaluate(preds: &[DetectionRecord], gt: &DatasetManifest, config: &EvalConfig) -> Result<EvalReport> {
    config.validate()?;
    let known: HashSet<u32> = gt.categories.iter().map(|c| c.id).collect();
    for c in &config.categories {
        if !known.contains(c) {
            return Err(Error::CategoryMismatch(format!(
                "category {c} is not defined by the ground truth"
            )));
        }
    }
    let images: HashSet<u64> = gt.images.iter().map(|i| i.id).collect();
    for (i, p) in preds.iter().enumerate() {
        if !known.contains(&p.category_id) {
            return Err(Error::CategoryMismatch(format!(
                "prediction {i} has category {} unknown to the ground truth",
                p.category_id
            )));
        }
        if !images.contains(&p.image_id) {
            return Err(Error::SchemaMismatch(format!(
                "prediction {i} refers to image {} absent from the ground truth",
                p.image_id
            )));
        }
    }

    let mut per_category = BTreeMap::new();
    let mut categories = config.categories.clone();
    categories.sort_unstable();
    categories.dedup();
    for &c in &categories {
        let m = match_predictions(preds, gt, c, config.iou_thresh);
        let (tp, fp) = m.counts_at(config.conf_thresh);
        let name = gt.category(c).expect("checked above").name.clone();
        per_category.insert(
            name,
            CategoryReport {
                category_id: c,
                ap: average_precision_with(&m, config.interpolation),
                precision: m.precision_at(config.conf_thresh),
                tp,
                fp,
                gt: m.gt_count,
            },
        );
    }
    let map = per_category.values().map(|r| r.ap).sum::<f64>() / per_category.len() as f64;
    Ok(EvalReport {
        per_category,
        map,
        config: ReportConfig {
            iou_thresh: config.iou_thresh,
            conf_thresh: config.conf_thresh,
            interpolation: config.interpolation,
            categories,
            zero_gt_policy: ZERO_GT_POLICY.into(),
            counts: "tp and fp count predictions scoring at least conf_thresh".into(),
        },
    })
}

fn short_name(name: &str) -> &str {
    match name {
        "targetobject" => "obj",
        other => other,
    }
}

/// Fixed-width table: one AP column per category, mAP, then one precision
/// column per category. Values are percentages with one decimal; an
/// undefined precision prints as `-`.
pub fn render_table(report: &EvalReport) -> String {
    let mut rows: Vec<&CategoryReport> = report.per_category.values().collect();
    rows.sort_by_key(|r| r.category_id);
    let name_of = |r: &CategoryReport| {
        report
            .per_category
            .iter()
            .find(|(_, v)| v.category_id == r.category_id)
            .map(|(k, _)| short_name(k).to_string())
            .unwrap_or_default()
    };

    let mut headers = Vec::new();
    let mut values = Vec::new();
    for r in &rows {
        headers.push(format!("{} AP", name_of(r)));
        values.push(format!("{:.1}", r.ap * 100.0));
    }
    headers.push("mAP".into());
    values.push(format!("{:.1}", report.map * 100.0));
    for r in &rows {
        headers.push(format!("{} P@{}", name_of(r), report.config.conf_thresh));
        values.push(r.precision.map_or("-".into(), |p| format!("{:.1}", p * 100.0)));
    }

    let widths: Vec<usize> = headers.iter().map(|h| h.len().max(7)).collect();
    let mut out = String::new();
    for (h, w) in headers.iter().zip(&widths) {
        let _ = write!(out, " {h:>w$}");
    }
    out.push('\n');
    for (v, w) in values.iter().zip(&widths) {
        let _ = write!(out, " {v:>w$}");
    }
    out.push('\n');
    out
}
