//! Layout evaluation: per-category count metrics, matched-box mIoU and
//! validity rates over a set of scenes. All scores are percentages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{box_iou_3d, boxes_overlap, out_of_bounds};
use crate::layout::Layout;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountMetrics {
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
}

fn category_counts(layout: &Layout) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for b in layout.boxes() {
        *counts.entry(b.category()).or_insert(0) += 1;
    }
    counts
}

/// Recall and precision over per-category box counts; accuracy is 100 only
/// when every category count matches. A side with no boxes scores 100 against
/// another empty side and 0 otherwise.
pub fn count_metrics(pred: &Layout, gt: &Layout) -> CountMetrics {
    let (p, g) = (category_counts(pred), category_counts(gt));
    let hits: usize = g.iter().map(|(c, &n)| n.min(p.get(c).copied().unwrap_or(0))).sum();
    let ratio = |total: usize| match (total, pred.is_empty() && gt.is_empty()) {
        (_, true) => 100.0,
        (0, false) => 0.0,
        (t, false) => 100.0 * hits as f64 / t as f64,
    };
    CountMetrics { recall: ratio(gt.len()), precision: ratio(pred.len()), accuracy: if p == g { 100.0 } else { 0.0 } }
}

/// Matches boxes within each category greedily by descending IoU, each box at
/// most once. Unmatched boxes count as zero; the sum is divided by the larger
/// of the two box counts. Two empty layouts score 100.
pub fn layout_miou(pred: &Layout, gt: &Layout) -> f64 {
    let denominator = pred.len().max(gt.len());
    if denominator == 0 {
        return 100.0;
    }
    let categories: BTreeSet<&str> = gt.boxes().iter().map(|b| b.category()).collect();
    let mut total = 0.0;
    for category in categories {
        let ps: Vec<_> = pred.boxes().iter().filter(|b| b.category() == category).collect();
        let gs: Vec<_> = gt.boxes().iter().filter(|b| b.category() == category).collect();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(ps.len() * gs.len());
        for (i, p) in ps.iter().enumerate() {
            for (j, g) in gs.iter().enumerate() {
                let iou = box_iou_3d(p, g);
                if iou > 0.0 {
                    pairs.push((iou, i, j));
                }
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let (mut used_p, mut used_g) = (vec![false; ps.len()], vec![false; gs.len()]);
        for (iou, i, j) in pairs {
            if !used_p[i] && !used_g[j] {
                used_p[i] = true;
                used_g[j] = true;
                total += iou;
            }
        }
    }
    100.0 * total / denominator as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneFlags {
    pub oob: bool,
    pub overlap: bool,
}

pub fn scene_flags(layout: &Layout, tol: f64) -> SceneFlags {
    let boxes = layout.boxes();
    let oob = boxes.iter().any(|b| out_of_bounds(b, layout.room(), tol));
    let overlap = boxes.iter().enumerate().any(|(i, a)| boxes[i + 1..].iter().any(|b| boxes_overlap(a, b, tol)));
    SceneFlags { oob, overlap }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEval {
    pub scene_id: String,
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub miou: f64,
    pub oob: bool,
    pub overlap: bool,
}

impl SceneEval {
    pub fn new(scene_id: impl Into<String>, pred: &Layout, gt: &Layout, tol: f64) -> Self {
        let counts = count_metrics(pred, gt);
        let flags = scene_flags(pred, tol);
        Self {
            scene_id: scene_id.into(),
            recall: counts.recall,
            precision: counts.precision,
            accuracy: counts.accuracy,
            miou: layout_miou(pred, gt),
            oob: flags.oob,
            overlap: flags.overlap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenes: Vec<SceneEval>,
    pub recall: f64,
    pub precision: f64,
    pub accuracy: f64,
    pub miou: f64,
    /// Percentage of predicted scenes with an out-of-bounds box.
    pub oob_rate: f64,
    pub overlap_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("scene ids differ: missing predictions {missing:?}, unexpected predictions {unexpected:?}, duplicates {duplicates:?}")]
    SceneIdMismatch { missing: Vec<String>, unexpected: Vec<String>, duplicates: Vec<String> },
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

/// Evaluates predictions against ground truth paired by scene id. Scenes are
/// reported in ground-truth order; the flags describe the predictions.
pub fn evaluate_set(preds: &[(String, Layout)], gts: &[(String, Layout)], tol: f64) -> Result<EvalReport, EvalError> {
    let mut duplicates = BTreeSet::new();
    let mut by_id = BTreeMap::new();
    for (id, layout) in preds {
        if by_id.insert(id.as_str(), layout).is_some() {
            duplicates.insert(id.clone());
        }
    }
    let mut gt_ids = BTreeSet::new();
    for (id, _) in gts {
        if !gt_ids.insert(id.as_str()) {
            duplicates.insert(id.clone());
        }
    }
    let missing: Vec<String> = gt_ids.iter().filter(|id| !by_id.contains_key(*id)).map(|s| s.to_string()).collect();
    let unexpected: Vec<String> = by_id.keys().filter(|id| !gt_ids.contains(*id)).map(|s| s.to_string()).collect();
    if !missing.is_empty() || !unexpected.is_empty() || !duplicates.is_empty() {
        return Err(EvalError::SceneIdMismatch { missing, unexpected, duplicates: duplicates.into_iter().collect() });
    }
    let scenes: Vec<SceneEval> =
        gts.par_iter().map(|(id, gt)| SceneEval::new(id, by_id[id.as_str()], gt, tol)).collect();
    let n = scenes.len();
    let pct = |flag: fn(&SceneEval) -> bool| mean(scenes.iter().map(|s| if flag(s) { 100.0 } else { 0.0 }), n);
    Ok(EvalReport {
        recall: mean(scenes.iter().map(|s| s.recall), n),
        precision: mean(scenes.iter().map(|s| s.precision), n),
        accuracy: mean(scenes.iter().map(|s| s.accuracy), n),
        miou: mean(scenes.iter().map(|s| s.miou), n),
        oob_rate: pct(|s| s.oob),
        overlap_rate: pct(|s| s.overlap),
        scenes,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }

    /// Aligned summary row with one line per scene beneath it.
    pub fn to_table(&self, label: &str) -> String {
        let mut out = String::new();
        let width = self.scenes.iter().map(|s| s.scene_id.len()).chain([label.len(), 6]).max().unwrap_or(6);
        let header = ["OOB", "rec.", "prec.", "acc.", "mIoU"];
        write!(out, "{:<width$}", "method").unwrap();
        for h in header {
            write!(out, " {h:>7}").unwrap();
        }
        out.push('\n');
        let row = |out: &mut String, name: &str, oob: f64, r: f64, p: f64, a: f64, m: f64| {
            writeln!(out, "{name:<width$} {oob:>7.2} {r:>7.2} {p:>7.2} {a:>7.2} {m:>7.2}").unwrap();
        };
        row(&mut out, label, self.oob_rate, self.recall, self.precision, self.accuracy, self.miou);
        if !self.scenes.is_empty() {
            out.push_str(&"-".repeat(width + 8 * header.len()));
            out.push('\n');
        }
        for s in &self.scenes {
            let oob = if s.oob { 100.0 } else { 0.0 };
            row(&mut out, &s.scene_id, oob, s.recall, s.precision, s.accuracy, s.miou);
        }
        out
    }
}
