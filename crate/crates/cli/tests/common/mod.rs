//! Helpers shared by the CLI integration tests and the acceptance suite.
//!
//! The oracles here deliberately avoid the library's matching and AP code:
//! overlaps are counted pixel by pixel on the integer grid and AP is summed
//! per true positive rather than integrated over a recall envelope.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

pub fn bgmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgmix"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn bgmix")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Relative path -> SHA-256 of every file under `root`.
pub fn tree_digest(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<String, String>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, acc);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                acc.insert(rel, hex::encode(Sha256::digest(fs::read(&p).unwrap())));
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

/// Integer box on the evaluation grid: (x, y, w, h).
pub type GridBox = (i64, i64, i64, i64);

/// (intersection, union) by counting covered unit cells.
pub fn raster_overlap(a: GridBox, b: GridBox) -> (i64, i64) {
    let covers = |r: GridBox, x: i64, y: i64| x >= r.0 && x < r.0 + r.2 && y >= r.1 && y < r.1 + r.3;
    let (mut inter, mut union) = (0, 0);
    for y in 0..16 {
        for x in 0..16 {
            let (ia, ib) = (covers(a, x, y), covers(b, x, y));
            inter += (ia && ib) as i64;
            union += (ia || ib) as i64;
        }
    }
    (inter, union)
}

#[derive(Debug, Clone, Copy)]
pub struct OraclePred {
    pub image: u64,
    pub score: f64,
    pub b: GridBox,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleGt {
    pub id: u64,
    pub image: u64,
    pub b: GridBox,
}

/// Greedy matching with exact rational overlaps. Returns TP flags in
/// evaluation order (score desc, image asc, box asc).
pub fn oracle_flags(preds: &[OraclePred], gts: &[OracleGt], iou_num: i64, iou_den: i64) -> Vec<(f64, bool)> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&i, &j| {
        let (p, q) = (&preds[i], &preds[j]);
        q.score
            .partial_cmp(&p.score)
            .unwrap()
            .then(p.image.cmp(&q.image))
            .then(p.b.cmp(&q.b))
    });
    let mut taken = vec![false; gts.len()];
    let mut gt_order: Vec<usize> = (0..gts.len()).collect();
    gt_order.sort_by_key(|&g| gts[g].id);
    let mut flags = Vec::new();
    for &i in &order {
        let p = preds[i];
        // best = (inter, union, gt index); compare fractions by cross-multiplying
        let mut best: Option<(i64, i64, usize)> = None;
        for &g in &gt_order {
            if taken[g] || gts[g].image != p.image {
                continue;
            }
            let (inter, union) = raster_overlap(p.b, gts[g].b);
            if inter * iou_den < iou_num * union {
                continue;
            }
            let better = match best {
                None => true,
                Some((bi, bu, _)) => inter * bu > bi * union,
            };
            if better {
                best = Some((inter, union, g));
            }
        }
        if let Some((_, _, g)) = best {
            taken[g] = true;
        }
        flags.push((p.score, best.is_some()));
    }
    flags
}

/// Each true positive adds 1/G times the best precision reachable at its
/// rank or later.
pub fn oracle_ap(flags: &[bool], gt_count: usize) -> f64 {
    if gt_count == 0 {
        return if flags.is_empty() { 1.0 } else { 0.0 };
    }
    let precision_at = |k: usize| flags[..=k].iter().filter(|f| **f).count() as f64 / (k + 1) as f64;
    let mut ap = 0.0;
    for k in 0..flags.len() {
        if flags[k] {
            let best = (k..flags.len()).map(precision_at).fold(0.0, f64::max);
            ap += best / gt_count as f64;
        }
    }
    ap
}

pub fn oracle_precision(flags: &[(f64, bool)], conf: f64) -> Option<f64> {
    let kept: Vec<bool> = flags.iter().filter(|f| f.0 >= conf).map(|f| f.1).collect();
    if kept.is_empty() {
        None
    } else {
        Some(kept.iter().filter(|t| **t).count() as f64 / kept.len() as f64)
    }
}
