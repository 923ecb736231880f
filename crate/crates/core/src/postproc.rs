//! From raw prediction maps to classified instances.
//!
//! The pipeline thresholds the foreground probability map, finds where
//! the paired distance maps change abruptly (instance boundaries show up
//! as strong gradients), erodes those boundary ridges away to get one
//! marker per nucleus, and grows the markers back out with a
//! marker-controlled watershed. An optional per-class probability stack
//! then types each instance by majority vote.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::components::{
    connected_components, relabel_sequential, remove_small_instances, Connectivity,
};
use crate::grid::{BinaryMask, Grid2D, GridError, HoverMap, InstanceMap};
use crate::sobel::{sobel_x, sobel_y, SobelKsize};
use crate::watershed::watershed;

#[derive(Debug, Error, PartialEq)]
pub enum PostProcError {
    #[error("foreground map is {np_dims:?} but distance maps are {hover_dims:?}")]
    DimsMismatch {
        np_dims: (usize, usize),
        hover_dims: (usize, usize),
    },
    #[error("class stack has {got} channels, need at least 2 (background + classes)")]
    TooFewClasses { got: usize },
    #[error("class channel {index} is {got:?}, expected {want:?}")]
    ClassChannelDims {
        index: usize,
        got: (usize, usize),
        want: (usize, usize),
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Pixelwise softmax outputs feeding post-processing: a foreground
/// probability map and, optionally, one probability map per class
/// (channel 0 is background).
#[derive(Debug, Clone)]
pub struct ProbMaps {
    np_prob: Grid2D<f64>,
    type_probs: Option<Vec<Grid2D<f64>>>,
}

impl ProbMaps {
    /// Clamps foreground probabilities to [0, 1] on ingest; distance maps
    /// elsewhere are taken as-is, but q outside [0, 1] is never
    /// meaningful. A type stack must have >= 2 channels matching q's dims.
    pub fn new(
        np_prob: Grid2D<f64>,
        type_probs: Option<Vec<Grid2D<f64>>>,
    ) -> Result<Self, PostProcError> {
        if let Some(stack) = &type_probs {
            if stack.len() < 2 {
                return Err(PostProcError::TooFewClasses { got: stack.len() });
            }
            for (index, channel) in stack.iter().enumerate() {
                if !channel.same_dims(&np_prob) {
                    return Err(PostProcError::ClassChannelDims {
                        index,
                        got: channel.dims(),
                        want: np_prob.dims(),
                    });
                }
            }
        }
        Ok(Self {
            np_prob: np_prob.map(|&v| v.clamp(0.0, 1.0)),
            type_probs,
        })
    }

    pub fn np_prob(&self) -> &Grid2D<f64> {
        &self.np_prob
    }

    pub fn type_probs(&self) -> Option<&[Grid2D<f64>]> {
        self.type_probs.as_deref()
    }
}

/// How the watershed energy surface is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyMode {
    /// Binary ridge map from thresholded distance-map gradients.
    #[default]
    Sobel,
    /// Smooth centroid-distance surface from the squared distance maps.
    SqSum,
}

/// How markers are extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkerMode {
    /// Foreground minus gradient ridges.
    #[default]
    Sobel,
    /// Band-pass on the squared centroid distance.
    Threshold,
}

/// Knobs for the instance-recovery pipeline. `h` thresholds the
/// foreground probability, `k` the normalized gradient magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PostProcConfig {
    pub h: f64,
    pub k: f64,
    pub sobel_ksize: SobelKsize,
    pub min_marker_area: usize,
    pub min_instance_area: usize,
    pub energy_mode: EnergyMode,
    pub marker_mode: MarkerMode,
    /// Inclusive band of squared centroid distance kept as marker seed
    /// material in [`MarkerMode::Threshold`].
    pub threshold_marker_range: (f64, f64),
}

impl Default for PostProcConfig {
    fn default() -> Self {
        Self {
            h: 0.5,
            k: 0.4,
            sobel_ksize: SobelKsize::Three,
            min_marker_area: 10,
            min_instance_area: 10,
            energy_mode: EnergyMode::Sobel,
            marker_mode: MarkerMode::Sobel,
            threshold_marker_range: (0.0, 0.4),
        }
    }
}

impl PostProcConfig {
    /// Panics on out-of-range fields; use after assembling a config by
    /// hand or from a file.
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.h && self.h < 1.0) {
            return Err(format!("h must be in (0, 1), got {}", self.h));
        }
        if !(0.0 < self.k && self.k < 1.0) {
            return Err(format!("k must be in (0, 1), got {}", self.k));
        }
        let (lo, hi) = self.threshold_marker_range;
        if !(lo < hi) {
            return Err(format!(
                "threshold_marker_range needs lo < hi, got ({lo}, {hi})"
            ));
        }
        Ok(())
    }
}

/// Instances plus a class assignment per label.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedInstances {
    pub instances: InstanceMap,
    /// label -> (class id >= 1, mean probability of that class over the
    /// instance). Empty when no class stack was supplied.
    pub types: BTreeMap<u32, (u8, f64)>,
}

/// Min-max rescale to [0, 1]; a constant map (max == min) becomes all
/// zeros rather than dividing by zero.
fn normalize_unit(g: &Grid2D<f64>) -> Grid2D<f64> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in g.iter() {
        min = min.min(v);
        max = max.max(v);
    }
    if !(max > min) {
        return Grid2D::new(g.height(), g.width(), 0.0);
    }
    let span = max - min;
    g.map(|&v| (v - min) / span)
}

/// Combined gradient-magnitude map: per channel, the absolute Sobel
/// derivative along its own axis (horizontal map differentiated
/// horizontally, vertical map vertically), min-max normalized to [0, 1],
/// then the pixelwise maximum of the two. High wherever either distance
/// map changes abruptly — instance boundaries and especially seams
/// between touching instances.
pub fn sobel_energy(p: &HoverMap, cfg: &PostProcConfig) -> Grid2D<f64> {
    let gx = normalize_unit(&sobel_x(p.horizontal(), cfg.sobel_ksize).map(|&v| v.abs()));
    let gy = normalize_unit(&sobel_y(p.vertical(), cfg.sobel_ksize).map(|&v| v.abs()));
    let mut out = gx;
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v = v.max(gy.data()[i]);
    }
    out
}

/// Squared distance from the nearest instance centre, used by the
/// `sqsum` modes.
pub fn square_sum(p: &HoverMap) -> Grid2D<f64> {
    let mut out = Grid2D::new(p.height(), p.width(), 0.0);
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let x = p.horizontal().data()[i];
        let y = p.vertical().data()[i];
        *v = x * x + y * y;
    }
    out
}

/// `1 - (x^2 + y^2)` clamped to [0, 1]: high at instance centres, zero at
/// and beyond the normalized boundary distance.
pub fn pseudo_distance_energy(p: &HoverMap) -> Grid2D<f64> {
    square_sum(p).map(|&v| (1.0 - v).clamp(0.0, 1.0))
}

/// Strictly-greater threshold: 1 where `a > b`.
pub fn threshold(a: &Grid2D<f64>, b: f64) -> BinaryMask {
    BinaryMask::from_fn(a.height(), a.width(), |r, c| *a.get(r, c) > b)
}

/// Extracts marker seeds, one blob per presumed nucleus.
///
/// `aux` is the mode's companion surface: the [`sobel_energy`] map in
/// [`MarkerMode::Sobel`], the raw [`square_sum`] map in
/// [`MarkerMode::Threshold`].
///
/// Sobel mode subtracts the thresholded gradient ridges from the
/// thresholded foreground (negatives rectify to zero), so touching
/// instances separate where their seam gradient is strong. Threshold mode
/// instead keeps foreground pixels whose squared centre distance falls in
/// `threshold_marker_range` (inclusive). Either way the surviving pixels
/// are component-labelled and blobs below `min_marker_area` are dropped.
pub fn compute_markers(
    q: &Grid2D<f64>,
    aux: &Grid2D<f64>,
    cfg: &PostProcConfig,
) -> InstanceMap {
    assert!(q.same_dims(aux), "marker inputs must share dimensions");
    let fg = threshold(q, cfg.h);
    let seed = match cfg.marker_mode {
        MarkerMode::Sobel => {
            let ridges = threshold(aux, cfg.k);
            BinaryMask::from_fn(q.height(), q.width(), |r, c| {
                fg.is_set(r, c) && !ridges.is_set(r, c)
            })
        }
        MarkerMode::Threshold => {
            let (lo, hi) = cfg.threshold_marker_range;
            BinaryMask::from_fn(q.height(), q.width(), |r, c| {
                let d = *aux.get(r, c);
                fg.is_set(r, c) && d >= lo && d <= hi
            })
        }
    };
    let markers = connected_components(&seed, Connectivity::Eight);
    remove_small_instances(&markers, cfg.min_marker_area)
}

/// Watershed energy surface. In [`EnergyMode::Sobel`] this is the binary
/// product `(1 - ridges) * foreground`, flat plateaus separated by
/// zero-energy ridges; in [`EnergyMode::SqSum`] it is the smooth
/// centre-distance surface masked to the foreground. `aux` follows the
/// same convention as [`compute_markers`].
pub fn energy_landscape(
    q: &Grid2D<f64>,
    aux: &Grid2D<f64>,
    cfg: &PostProcConfig,
) -> Grid2D<f64> {
    assert!(q.same_dims(aux), "energy inputs must share dimensions");
    let fg = threshold(q, cfg.h);
    let mut out = Grid2D::new(q.height(), q.width(), 0.0);
    match cfg.energy_mode {
        EnergyMode::Sobel => {
            let ridges = threshold(aux, cfg.k);
            for r in 0..q.height() {
                for c in 0..q.width() {
                    if fg.is_set(r, c) && !ridges.is_set(r, c) {
                        out.set(r, c, 1.0);
                    }
                }
            }
        }
        EnergyMode::SqSum => {
            for r in 0..q.height() {
                for c in 0..q.width() {
                    if fg.is_set(r, c) {
                        out.set(r, c, (1.0 - aux.get(r, c)).clamp(0.0, 1.0));
                    }
                }
            }
        }
    }
    out
}

/// Assigns each instance the class most of its pixels vote for.
///
/// Each pixel votes for its argmax channel (ties to the lowest channel).
/// Background votes are ignored unless every pixel of the instance votes
/// background, in which case the class with the highest mean probability
/// over the instance wins. Vote ties break by higher mean probability,
/// then lower class id. Returned probability is the mean of the winning
/// class's channel over the instance.
pub fn classify_instances(
    instances: &InstanceMap,
    type_probs: &[Grid2D<f64>],
) -> ClassifiedInstances {
    assert!(type_probs.len() >= 2, "need background + at least one class");
    let num_classes = type_probs.len() - 1;

    struct Tally {
        votes: Vec<usize>,
        prob_sums: Vec<f64>,
        area: usize,
    }

    let mut tallies: BTreeMap<u32, Tally> = BTreeMap::new();
    for (r, c, &label) in instances.grid().indexed_iter() {
        if label == 0 {
            continue;
        }
        let tally = tallies.entry(label).or_insert_with(|| Tally {
            votes: vec![0; num_classes + 1],
            prob_sums: vec![0.0; num_classes + 1],
            area: 0,
        });
        let mut best = 0usize;
        let mut best_p = f64::NEG_INFINITY;
        for (ch, probs) in type_probs.iter().enumerate() {
            let p = *probs.get(r, c);
            tally.prob_sums[ch] += p;
            if p > best_p {
                best_p = p;
                best = ch;
            }
        }
        tally.votes[best] += 1;
        tally.area += 1;
    }

    let mut types = BTreeMap::new();
    for (label, tally) in tallies {
        let any_foreground_vote = tally.votes[1..].iter().any(|&v| v > 0);
        let chosen = if any_foreground_vote {
            let mut best = 1usize;
            for ch in 2..=num_classes {
                let better = tally.votes[ch] > tally.votes[best]
                    || (tally.votes[ch] == tally.votes[best]
                        && tally.prob_sums[ch] > tally.prob_sums[best]);
                if better {
                    best = ch;
                }
            }
            best
        } else {
            // no pixel preferred any class: fall back to mean probability
            let mut best = 1usize;
            for ch in 2..=num_classes {
                if tally.prob_sums[ch] > tally.prob_sums[best] {
                    best = ch;
                }
            }
            best
        };
        let mean_prob = tally.prob_sums[chosen] / tally.area as f64;
        types.insert(label, (chosen as u8, mean_prob));
    }

    ClassifiedInstances {
        instances: instances.clone(),
        types,
    }
}

/// Full recovery pipeline: energy and markers from the distance maps,
/// watershed over the thresholded foreground, small-instance cleanup,
/// sequential relabel, then optional classification.
pub fn run_pipeline(
    p: &HoverMap,
    maps: &ProbMaps,
    cfg: &PostProcConfig,
) -> Result<ClassifiedInstances, PostProcError> {
    let q = maps.np_prob();
    if q.dims() != p.dims() {
        return Err(PostProcError::DimsMismatch {
            np_dims: q.dims(),
            hover_dims: p.dims(),
        });
    }

    let marker_aux = match cfg.marker_mode {
        MarkerMode::Sobel => sobel_energy(p, cfg),
        MarkerMode::Threshold => square_sum(p),
    };
    let energy_aux = match cfg.energy_mode {
        EnergyMode::Sobel => match cfg.marker_mode {
            MarkerMode::Sobel => marker_aux.clone(),
            MarkerMode::Threshold => sobel_energy(p, cfg),
        },
        EnergyMode::SqSum => square_sum(p),
    };

    let mask = threshold(q, cfg.h);
    let markers = compute_markers(q, &marker_aux, cfg);
    let energy = energy_landscape(q, &energy_aux, cfg);
    let flooded = watershed(&markers, &energy, &mask);
    let cleaned = relabel_sequential(&remove_small_instances(&flooded, cfg.min_instance_area));

    Ok(match maps.type_probs() {
        Some(stack) => classify_instances(&cleaned, stack),
        None => ClassifiedInstances {
            instances: cleaned,
            types: BTreeMap::new(),
        },
    })
}
