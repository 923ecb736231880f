//! Pixel-level segmentation metrics over instance maps.

use std::collections::{BTreeMap, BTreeSet};

use super::MetricsError;
use crate::grid::{BinaryMask, InstanceMap};

/// Pairwise overlap bookkeeping between two instance maps: intersection
/// counts per (gt, pred) label pair plus per-side areas.
struct Contingency {
    inter: BTreeMap<u32, BTreeMap<u32, usize>>,
    gt_areas: BTreeMap<u32, usize>,
    pred_areas: BTreeMap<u32, usize>,
}

impl Contingency {
    fn build(gt: &InstanceMap, pred: &InstanceMap) -> Self {
        assert!(
            gt.grid().same_dims(pred.grid()),
            "metric inputs must share dimensions"
        );
        let mut inter: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
        let mut gt_areas: BTreeMap<u32, usize> = BTreeMap::new();
        let mut pred_areas: BTreeMap<u32, usize> = BTreeMap::new();
        for (g, p) in gt.grid().iter().zip(pred.grid().iter()) {
            if *g > 0 {
                *gt_areas.entry(*g).or_insert(0) += 1;
            }
            if *p > 0 {
                *pred_areas.entry(*p).or_insert(0) += 1;
            }
            if *g > 0 && *p > 0 {
                *inter.entry(*g).or_default().entry(*p).or_insert(0) += 1;
            }
        }
        Self {
            inter,
            gt_areas,
            pred_areas,
        }
    }

    fn iou(&self, gt_label: u32, pred_label: u32, inter: usize) -> f64 {
        let union = self.gt_areas[&gt_label] + self.pred_areas[&pred_label] - inter;
        inter as f64 / union as f64
    }
}

/// Unique IoU>0.5 matching between two instance maps.
#[derive(Debug, Clone, PartialEq)]
pub struct SegMatchResult {
    /// `(gt_label, pred_label, iou)` with iou strictly above 0.5, sorted
    /// by gt label. The >0.5 requirement makes each side appear at most
    /// once, no assignment search needed.
    pub pairs: Vec<(u32, u32, f64)>,
    pub unmatched_gt: Vec<u32>,
    pub unmatched_pred: Vec<u32>,
}

/// Plain Dice over foreground masks: `2|X∩Y| / (|X|+|Y|)`. Two empty
/// masks score 1.0.
pub fn dice_score(x: &BinaryMask, y: &BinaryMask) -> f64 {
    assert!(
        x.grid().same_dims(y.grid()),
        "metric inputs must share dimensions"
    );
    let mut inter = 0usize;
    let mut total = 0usize;
    for (a, b) in x.grid().iter().zip(y.grid().iter()) {
        inter += usize::from(*a == 1 && *b == 1);
        total += usize::from(*a == 1) + usize::from(*b == 1);
    }
    if total == 0 {
        return 1.0;
    }
    2.0 * inter as f64 / total as f64
}

/// Dice aggregated per ground-truth instance.
///
/// Every GT instance is paired with the prediction overlapping it most
/// (ties to the smaller prediction, then the lower pred label, so the
/// score never depends on how labels happen to be numbered; a GT nothing
/// overlaps contributes only its own area to the denominator), then a
/// single ratio `Σ 2|x∩y| / Σ(|x|+|y|)` is returned. A prediction that
/// leaks into a neighbouring GT instance it does not dominate drags the
/// score down twice — once as missing area, once as foreign area — which
/// is exactly the over-penalization this metric is known for.
pub fn dice2_score(gt: &InstanceMap, pred: &InstanceMap) -> f64 {
    let table = Contingency::build(gt, pred);
    if table.gt_areas.is_empty() && table.pred_areas.is_empty() {
        return 1.0;
    }
    let mut num = 0usize;
    let mut den = 0usize;
    for (&gt_label, &gt_area) in &table.gt_areas {
        let best = table.inter.get(&gt_label).and_then(|row| {
            row.iter()
                .map(|(&pred_label, &inter)| (inter, table.pred_areas[&pred_label]))
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        });
        match best {
            Some((inter, pred_area)) => {
                num += 2 * inter;
                den += gt_area + pred_area;
            }
            None => den += gt_area,
        }
    }
    if den == 0 {
        // no GT at all but predictions exist: nothing was recovered
        return 0.0;
    }
    num as f64 / den as f64
}

/// Aggregated Jaccard index.
///
/// Each GT instance grabs the prediction with the highest IoU (ties to
/// the larger intersection, then the lower pred label); intersections
/// and unions accumulate over these matches, predictions left unused add
/// their full area to the union, and the single ratio is returned. Two
/// empty maps score 1.0.
pub fn aji_score(gt: &InstanceMap, pred: &InstanceMap) -> f64 {
    let table = Contingency::build(gt, pred);
    if table.gt_areas.is_empty() && table.pred_areas.is_empty() {
        return 1.0;
    }
    let mut inter_sum = 0usize;
    let mut union_sum = 0usize;
    let mut used: BTreeSet<u32> = BTreeSet::new();
    for (&gt_label, &gt_area) in &table.gt_areas {
        let best = table.inter.get(&gt_label).and_then(|row| {
            row.iter()
                .map(|(&pred_label, &inter)| {
                    (pred_label, inter, table.iou(gt_label, pred_label, inter))
                })
                .max_by(|a, b| {
                    a.2.total_cmp(&b.2)
                        .then(a.1.cmp(&b.1))
                        .then(b.0.cmp(&a.0))
                })
        });
        match best {
            Some((pred_label, inter, _)) => {
                inter_sum += inter;
                union_sum += gt_area + table.pred_areas[&pred_label] - inter;
                used.insert(pred_label);
            }
            None => union_sum += gt_area,
        }
    }
    for (&pred_label, &area) in &table.pred_areas {
        if !used.contains(&pred_label) {
            union_sum += area;
        }
    }
    inter_sum as f64 / union_sum as f64
}

/// All (gt, pred) pairs with IoU strictly above 0.5. Uniqueness of the
/// pairing is a theorem at that threshold; it is asserted anyway.
pub fn match_iou(gt: &InstanceMap, pred: &InstanceMap) -> SegMatchResult {
    let table = Contingency::build(gt, pred);
    let mut pairs = Vec::new();
    let mut matched_gt: BTreeSet<u32> = BTreeSet::new();
    let mut matched_pred: BTreeSet<u32> = BTreeSet::new();
    for (&gt_label, row) in &table.inter {
        for (&pred_label, &inter) in row {
            let iou = table.iou(gt_label, pred_label, inter);
            if iou > 0.5 {
                assert!(
                    matched_gt.insert(gt_label) && matched_pred.insert(pred_label),
                    "IoU>0.5 pairs cannot share a label"
                );
                pairs.push((gt_label, pred_label, iou));
            }
        }
    }
    let unmatched_gt = table
        .gt_areas
        .keys()
        .copied()
        .filter(|l| !matched_gt.contains(l))
        .collect();
    let unmatched_pred = table
        .pred_areas
        .keys()
        .copied()
        .filter(|l| !matched_pred.contains(l))
        .collect();
    SegMatchResult {
        pairs,
        unmatched_gt,
        unmatched_pred,
    }
}

/// `(dq, sq, pq)` from a unique matching:
/// `dq = |TP| / (|TP| + ½|FP| + ½|FN|)`, `sq = mean IoU over TP`, and
/// `pq = dq × sq` by construction. No TP at all gives (0, 0, 0), except
/// the fully empty case which scores (1, 1, 1).
pub fn panoptic_quality(m: &SegMatchResult) -> (f64, f64, f64) {
    let tp = m.pairs.len();
    let fp = m.unmatched_pred.len();
    let fn_ = m.unmatched_gt.len();
    if tp == 0 {
        return if fp == 0 && fn_ == 0 {
            (1.0, 1.0, 1.0)
        } else {
            (0.0, 0.0, 0.0)
        };
    }
    let dq = tp as f64 / (tp as f64 + 0.5 * fp as f64 + 0.5 * fn_ as f64);
    // summed in value order, not label order, so relabelling either map
    // cannot shift the result by a rounding step
    let mut ious: Vec<f64> = m.pairs.iter().map(|&(_, _, iou)| iou).collect();
    ious.sort_unstable_by(f64::total_cmp);
    let sq = ious.iter().sum::<f64>() / tp as f64;
    (dq, sq, dq * sq)
}

/// Per-image summary of all segmentation metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegMetrics {
    pub dice: f64,
    pub dice2: f64,
    pub aji: f64,
    pub dq: f64,
    pub sq: f64,
    pub pq: f64,
}

/// Evaluates every segmentation metric for one image pair.
pub fn seg_metrics(gt: &InstanceMap, pred: &InstanceMap) -> SegMetrics {
    let (dq, sq, pq) = panoptic_quality(&match_iou(gt, pred));
    SegMetrics {
        dice: dice_score(&gt.foreground(), &pred.foreground()),
        dice2: dice2_score(gt, pred),
        aji: aji_score(gt, pred),
        dq,
        sq,
        pq,
    }
}

/// Unweighted per-field mean over images. The pq field is the mean of
/// per-image pq values — deliberately not mean(dq) × mean(sq), which
/// differs in general.
pub fn dataset_average(per_image: &[SegMetrics]) -> Result<SegMetrics, MetricsError> {
    if per_image.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    let n = per_image.len() as f64;
    Ok(SegMetrics {
        dice: per_image.iter().map(|m| m.dice).sum::<f64>() / n,
        dice2: per_image.iter().map(|m| m.dice2).sum::<f64>() / n,
        aji: per_image.iter().map(|m| m.aji).sum::<f64>() / n,
        dq: per_image.iter().map(|m| m.dq).sum::<f64>() / n,
        sq: per_image.iter().map(|m| m.sq).sum::<f64>() / n,
        pq: per_image.iter().map(|m| m.pq).sum::<f64>() / n,
    })
}
