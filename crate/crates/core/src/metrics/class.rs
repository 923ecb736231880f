//! Detection matching by centroid distance and the combined
//! detection + classification F-score.

use std::collections::{BTreeMap, BTreeSet};

use super::MetricsError;

/// Ground-truth class of one instance. `Unlabelled` supports datasets
/// where only a subset of nuclei carry a type annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtClass {
    Labelled(u32),
    Unlabelled,
}

/// One-to-one centroid matching within a fixed radius.
#[derive(Debug, Clone, PartialEq)]
pub struct DetMatchResult {
    /// `(gt_index, pred_index, distance)` with distance ≤ radius.
    pub tp_pairs: Vec<(usize, usize, f64)>,
    /// GT indices left unmatched.
    pub fn_gt: Vec<usize>,
    /// Prediction indices left unmatched.
    pub fp_pred: Vec<usize>,
    pub radius: f64,
}

/// Greedy nearest-first matching of predicted to ground-truth centroids.
///
/// All candidate pairs within `radius` (inclusive, Euclidean) are sorted
/// by distance — ties by lower GT index, then lower prediction index —
/// and accepted whenever both sides are still free. Greedy rather than
/// globally optimal: this mirrors common detection-benchmark practice
/// and keeps results reproducible across implementations.
pub fn match_by_radius(
    gt_centroids: &[(f64, f64)],
    pred_centroids: &[(f64, f64)],
    radius: f64,
) -> DetMatchResult {
    assert!(radius > 0.0, "matching radius must be positive");
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, g) in gt_centroids.iter().enumerate() {
        for (pi, p) in pred_centroids.iter().enumerate() {
            let d = ((g.0 - p.0).powi(2) + (g.1 - p.1).powi(2)).sqrt();
            if d <= radius {
                candidates.push((d, gi, pi));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut gt_taken = vec![false; gt_centroids.len()];
    let mut pred_taken = vec![false; pred_centroids.len()];
    let mut tp_pairs = Vec::new();
    for (d, gi, pi) in candidates {
        if !gt_taken[gi] && !pred_taken[pi] {
            gt_taken[gi] = true;
            pred_taken[pi] = true;
            tp_pairs.push((gi, pi, d));
        }
    }
    DetMatchResult {
        tp_pairs,
        fn_gt: (0..gt_centroids.len()).filter(|&i| !gt_taken[i]).collect(),
        fp_pred: (0..pred_centroids.len())
            .filter(|&i| !pred_taken[i])
            .collect(),
        radius,
    }
}

/// Per-type split of the correctly detected pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TypeCounts {
    /// GT and prediction both this type.
    pub tp_c: usize,
    /// GT and prediction both some other type.
    pub tn_c: usize,
    /// Prediction claims this type, GT disagrees.
    pub fp_c: usize,
    /// GT is this type, prediction disagrees.
    pub fn_c: usize,
}

/// Detection counts plus the per-type classification scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    /// Detection F1: `2·TP_d / (2·TP_d + FP_d + FN_d)`.
    pub f_d: f64,
    /// Combined detection+classification score per type.
    pub per_type: BTreeMap<u32, f64>,
    pub tp_d: usize,
    pub fp_d: usize,
    pub fn_d: usize,
    pub type_counts: BTreeMap<u32, TypeCounts>,
    /// Matched pairs classified correctly / incorrectly (labelled GT only).
    pub a_c: usize,
    pub b_c: usize,
    /// Matched pairs whose GT carries no type annotation. These count
    /// towards detection but are excluded from every classification set.
    pub unlabelled_matched: usize,
}

/// Combined detection + classification scoring.
///
/// Every matched pair contributes to detection quality. For the
/// classification sets, pairs whose GT instance is unlabelled are first
/// tallied and then subtracted back out of the misclassified set and
/// each type's false-negative count — the partially-annotated-data rule
/// — leaving them in no classification set at all. Per type `t` the
/// score doubles the classification counts relative to the detection
/// residuals:
///
/// ```text
/// F_t = 2(TP_c + TN_c) / [2(TP_c + TN_c) + 2·FP_c + 2·FN_c + FP_d + FN_d]
/// ```
///
/// `gt_types[i]` is the class of GT centroid `i` as passed to
/// [`match_by_radius`]; `pred_types` likewise for predictions. Every
/// labelled type must be a member of `types`.
pub fn classification_scores(
    det: &DetMatchResult,
    gt_types: &[GtClass],
    pred_types: &[u32],
    types: &BTreeSet<u32>,
) -> Result<ClassMetrics, MetricsError> {
    let gt_total = det.tp_pairs.len() + det.fn_gt.len();
    if gt_types.len() != gt_total {
        return Err(MetricsError::TypeArrayLength {
            expected: gt_total,
            got: gt_types.len(),
        });
    }
    let pred_total = det.tp_pairs.len() + det.fp_pred.len();
    if pred_types.len() != pred_total {
        return Err(MetricsError::TypeArrayLength {
            expected: pred_total,
            got: pred_types.len(),
        });
    }
    for (index, &type_id) in pred_types.iter().enumerate() {
        if !types.contains(&type_id) {
            return Err(MetricsError::UnknownPredType { index, type_id });
        }
    }
    for (index, &class) in gt_types.iter().enumerate() {
        if let GtClass::Labelled(type_id) = class {
            if !types.contains(&type_id) {
                return Err(MetricsError::UnknownGtType { index, type_id });
            }
        }
    }

    let tp_d = det.tp_pairs.len();
    let fp_d = det.fp_pred.len();
    let fn_d = det.fn_gt.len();

    let mut a_c = 0usize;
    let mut b_c = 0usize;
    let mut unlabelled_matched = 0usize;
    let mut type_counts: BTreeMap<u32, TypeCounts> =
        types.iter().map(|&t| (t, TypeCounts::default())).collect();

    for &(gi, pi, _) in &det.tp_pairs {
        let pred_t = pred_types[pi];
        let gt_t = match gt_types[gi] {
            GtClass::Unlabelled => {
                unlabelled_matched += 1;
                continue;
            }
            GtClass::Labelled(t) => t,
        };
        if gt_t == pred_t {
            a_c += 1;
        } else {
            b_c += 1;
        }
        for (&t, counts) in type_counts.iter_mut() {
            match (gt_t == t, pred_t == t) {
                (true, true) => counts.tp_c += 1,
                (false, false) => counts.tn_c += 1,
                (false, true) => counts.fp_c += 1,
                (true, false) => counts.fn_c += 1,
            }
        }
    }

    let ratio = |num: f64, den: f64| if den == 0.0 { 1.0 } else { num / den };
    let f_d = ratio(
        2.0 * tp_d as f64,
        2.0 * tp_d as f64 + fp_d as f64 + fn_d as f64,
    );
    let per_type = type_counts
        .iter()
        .map(|(&t, c)| {
            let hits = 2.0 * (c.tp_c + c.tn_c) as f64;
            let den =
                hits + 2.0 * (c.fp_c + c.fn_c) as f64 + fp_d as f64 + fn_d as f64;
            (t, ratio(hits, den))
        })
        .collect();

    Ok(ClassMetrics {
        f_d,
        per_type,
        tp_d,
        fp_d,
        fn_d,
        type_counts,
        a_c,
        b_c,
        unlabelled_matched,
    })
}

/// Both sides of the all-types decomposition
/// `F_c^T = F_d × accuracy-within-detected`: the left side evaluates
/// `2·A_c / (2(A_c+B_c) + FP_d + FN_d)` directly, the right side
/// multiplies the detection F1 by `A_c / (A_c + B_c)`. The two agree
/// whenever GT types are exhaustively labelled; with unlabelled GT the
/// detection F1 counts pairs the accuracy term cannot see, and the sides
/// legitimately diverge.
pub fn decomposition_check(cm: &ClassMetrics) -> (f64, f64) {
    let classified = (cm.a_c + cm.b_c) as f64;
    let residual = (cm.fp_d + cm.fn_d) as f64;
    let lhs = if 2.0 * classified + residual == 0.0 {
        1.0
    } else {
        2.0 * cm.a_c as f64 / (2.0 * classified + residual)
    };
    let accuracy = if classified == 0.0 {
        if residual == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        cm.a_c as f64 / classified
    };
    (lhs, cm.f_d * accuracy)
}
