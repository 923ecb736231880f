//! Segmentation and classification quality metrics.
//!
//! Segmentation metrics ([`dice_score`], [`dice2_score`], [`aji_score`],
//! [`panoptic_quality`]) compare instance maps pixelwise. Classification
//! metrics ([`match_by_radius`], [`classification_scores`]) work on
//! centroid lists and per-instance type ids, so they apply to detection
//! models that never produce masks.
//!
//! Conventions shared across the module: comparing two images with no
//! instances at all scores 1.0 (a correctly predicted empty image is
//! perfect), and every tie is broken deterministically (lower label or
//! lower index), so identical inputs always reproduce identical results.

mod class;
mod seg;

pub use class::{
    classification_scores, decomposition_check, match_by_radius, ClassMetrics, DetMatchResult,
    GtClass, TypeCounts,
};
pub use seg::{
    aji_score, dataset_average, dice2_score, dice_score, match_iou, panoptic_quality, seg_metrics,
    SegMatchResult, SegMetrics,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("cannot average an empty list of per-image metrics")]
    EmptyDataset,
    #[error("prediction {index} has type id {type_id}, which is not in the type set")]
    UnknownPredType { index: usize, type_id: u32 },
    #[error("ground truth {index} has type id {type_id}, which is not in the type set")]
    UnknownGtType { index: usize, type_id: u32 },
    #[error("type arrays must cover all instances: expected {expected}, got {got}")]
    TypeArrayLength { expected: usize, got: usize },
}
