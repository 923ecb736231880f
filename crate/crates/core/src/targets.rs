//! Training targets derived from ground-truth instance maps.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::components::instance_stats;
use crate::grid::{BinaryMask, Grid2D, HoverMap, InstanceMap, TypeMap};

#[derive(Debug, Error, PartialEq)]
pub enum TargetError {
    #[error("instance {label} has no entry in the class mapping")]
    MissingTypeMapping { label: u32 },
    #[error("instance {label} maps to class {class}, outside 1..={num_classes}")]
    InvalidClassId {
        label: u32,
        class: u8,
        num_classes: u8,
    },
}

/// Signed horizontal/vertical distance targets.
///
/// For every instance, each pixel gets its column (row) offset from the
/// instance centre — the pixel-area centroid rounded to the nearest
/// integer pixel, so the centre line itself is exactly 0 — then offsets
/// are rescaled per instance and per sign so that each occupied side
/// spans exactly to -1 or +1. Background stays 0. A side with no extent
/// (nothing right of the centre column, say) stays 0 rather than
/// dividing by zero.
///
/// The gradient of these maps is small inside an instance and large
/// wherever two instances touch — the horizontal map jumps from +1 to -1
/// across a vertical seam — which is what the marker extraction in
/// [`crate::postproc`] keys on.
pub fn hover_targets(instances: &InstanceMap) -> HoverMap {
    let (height, width) = instances.dims();
    let mut horizontal = Grid2D::new(height, width, 0.0f64);
    let mut vertical = Grid2D::new(height, width, 0.0f64);

    struct Extent {
        centre: (f64, f64),
        max_left: f64,
        max_right: f64,
        max_up: f64,
        max_down: f64,
    }

    let mut extents: BTreeMap<u32, Extent> = BTreeMap::new();
    for stats in instance_stats(instances) {
        extents.insert(
            stats.label,
            Extent {
                centre: (stats.centroid.0.round(), stats.centroid.1.round()),
                max_left: 0.0,
                max_right: 0.0,
                max_up: 0.0,
                max_down: 0.0,
            },
        );
    }

    for (row, col, &label) in instances.grid().indexed_iter() {
        if label == 0 {
            continue;
        }
        let e = extents.get_mut(&label).expect("stats cover every label");
        let dc = col as f64 - e.centre.1;
        let dr = row as f64 - e.centre.0;
        if dc < 0.0 {
            e.max_left = e.max_left.max(-dc);
        } else {
            e.max_right = e.max_right.max(dc);
        }
        if dr < 0.0 {
            e.max_up = e.max_up.max(-dr);
        } else {
            e.max_down = e.max_down.max(dr);
        }
    }

    for (row, col, &label) in instances.grid().indexed_iter() {
        if label == 0 {
            continue;
        }
        let e = &extents[&label];
        let dc = col as f64 - e.centre.1;
        let dr = row as f64 - e.centre.0;
        let h = if dc < 0.0 {
            dc / e.max_left
        } else if e.max_right > 0.0 {
            dc / e.max_right
        } else {
            0.0
        };
        let v = if dr < 0.0 {
            dr / e.max_up
        } else if e.max_down > 0.0 {
            dr / e.max_down
        } else {
            0.0
        };
        horizontal.set(row, col, h);
        vertical.set(row, col, v);
    }

    HoverMap::new(horizontal, vertical).expect("both maps share instance dims")
}

/// Foreground/background target: 1 on any instance pixel.
pub fn binary_target(instances: &InstanceMap) -> BinaryMask {
    instances.foreground()
}

/// Per-pixel class target from a per-instance class assignment.
///
/// Every label present in `instances` must map to a class in
/// `1..=num_classes`; background stays 0.
pub fn type_target(
    instances: &InstanceMap,
    class_of: &BTreeMap<u32, u8>,
    num_classes: u8,
) -> Result<TypeMap, TargetError> {
    for label in instances.labels() {
        match class_of.get(&label) {
            None => return Err(TargetError::MissingTypeMapping { label }),
            Some(&class) if class == 0 || class > num_classes => {
                return Err(TargetError::InvalidClassId {
                    label,
                    class,
                    num_classes,
                })
            }
            Some(_) => {}
        }
    }
    let grid = instances
        .grid()
        .map(|&label| if label == 0 { 0 } else { class_of[&label] });
    Ok(TypeMap::from_grid(grid))
}
