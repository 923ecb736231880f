//! Connected-component labelling and per-instance bookkeeping.

use crate::grid::{BinaryMask, Grid2D, InstanceMap};

/// Pixel adjacency. `Eight` includes diagonals and is the default
/// everywhere nuclei are labelled; `Four` exists for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Area, centroid and bounding box of one labelled instance.
///
/// The centroid is the unweighted mean of pixel coordinates; the bounding
/// box is inclusive on all sides.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceStats {
    pub label: u32,
    pub area: usize,
    /// `(row, col)` mean of member pixels.
    pub centroid: (f64, f64),
    /// `(min_row, min_col, max_row, max_col)`, inclusive.
    pub bbox: (usize, usize, usize, usize),
}

/// Labels connected foreground regions 1, 2, ... in raster order of each
/// region's first-encountered pixel. Deterministic: identical input yields
/// identical labelling.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> InstanceMap {
    let (height, width) = mask.dims();
    let mut labels = Grid2D::new(height, width, 0u32);
    let offsets = connectivity.offsets();
    let mut next_label = 0u32;
    let mut queue = std::collections::VecDeque::new();

    for row in 0..height {
        for col in 0..width {
            if !mask.is_set(row, col) || *labels.get(row, col) != 0 {
                continue;
            }
            next_label += 1;
            labels.set(row, col, next_label);
            queue.push_back((row, col));
            while let Some((r, c)) = queue.pop_front() {
                for &(dr, dc) in offsets {
                    let nr = r as isize + dr;
                    let nc = c as isize + dc;
                    if nr < 0 || nc < 0 || nr >= height as isize || nc >= width as isize {
                        continue;
                    }
                    let (nr, nc) = (nr as usize, nc as usize);
                    if mask.is_set(nr, nc) && *labels.get(nr, nc) == 0 {
                        labels.set(nr, nc, next_label);
                        queue.push_back((nr, nc));
                    }
                }
            }
        }
    }
    InstanceMap::from_grid(labels)
}

/// Per-instance statistics, sorted by label ascending.
pub fn instance_stats(instances: &InstanceMap) -> Vec<InstanceStats> {
    use std::collections::BTreeMap;

    struct Acc {
        area: usize,
        sum_row: f64,
        sum_col: f64,
        bbox: (usize, usize, usize, usize),
    }

    let mut acc: BTreeMap<u32, Acc> = BTreeMap::new();
    for (row, col, &label) in instances.grid().indexed_iter() {
        if label == 0 {
            continue;
        }
        let entry = acc.entry(label).or_insert(Acc {
            area: 0,
            sum_row: 0.0,
            sum_col: 0.0,
            bbox: (row, col, row, col),
        });
        entry.area += 1;
        entry.sum_row += row as f64;
        entry.sum_col += col as f64;
        entry.bbox.0 = entry.bbox.0.min(row);
        entry.bbox.1 = entry.bbox.1.min(col);
        entry.bbox.2 = entry.bbox.2.max(row);
        entry.bbox.3 = entry.bbox.3.max(col);
    }

    acc.into_iter()
        .map(|(label, a)| InstanceStats {
            label,
            area: a.area,
            centroid: (a.sum_row / a.area as f64, a.sum_col / a.area as f64),
            bbox: a.bbox,
        })
        .collect()
}

/// Remaps labels to 1..=n, assigned in raster order of each label's first
/// pixel. Already-sequential maps come back unchanged.
pub fn relabel_sequential(instances: &InstanceMap) -> InstanceMap {
    use std::collections::HashMap;

    let mut mapping: HashMap<u32, u32> = HashMap::new();
    let mut next = 0u32;
    let grid = instances.grid().map(|&label| {
        if label == 0 {
            0
        } else {
            *mapping.entry(label).or_insert_with(|| {
                next += 1;
                next
            })
        }
    });
    InstanceMap::from_grid(grid)
}

/// Zeroes out instances whose pixel count is strictly below `min_area`,
/// then relabels sequentially.
pub fn remove_small_instances(instances: &InstanceMap, min_area: usize) -> InstanceMap {
    use std::collections::HashMap;

    let mut areas: HashMap<u32, usize> = HashMap::new();
    for &label in instances.grid().iter() {
        if label > 0 {
            *areas.entry(label).or_insert(0) += 1;
        }
    }
    let kept = instances.grid().map(|&label| {
        if label > 0 && areas[&label] >= min_area {
            label
        } else {
            0
        }
    });
    relabel_sequential(&InstanceMap::from_grid(kept))
}
