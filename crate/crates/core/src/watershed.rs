//! Marker-controlled watershed by priority flooding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::components::{connected_components, Connectivity};
use crate::grid::{BinaryMask, Grid2D, InstanceMap};

/// Queue entry: floods highest-energy pixels first, FIFO within equal
/// energy so plateau splits are geodesic and deterministic.
struct Candidate {
    energy: f64,
    seq: u64,
    row: usize,
    col: usize,
    label: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap: higher energy wins, then earlier insertion
        self.energy
            .total_cmp(&other.energy)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Grows marker labels outward over `mask`, flooding `energy` from high
/// to low. Every mask pixel connected (8-way) to a marker receives that
/// marker's label; mask components containing no marker are not dropped
/// but come back as fresh instances, one per component.
///
/// Marker pixels must lie inside `mask`. The flood is deterministic:
/// candidates are ordered by energy with FIFO tie-breaking, and seeds are
/// enqueued in raster order.
pub fn watershed(markers: &InstanceMap, energy: &Grid2D<f64>, mask: &BinaryMask) -> InstanceMap {
    assert!(
        markers.grid().same_dims(energy) && energy.same_dims(mask.grid()),
        "watershed inputs must share dimensions"
    );
    let (height, width) = mask.dims();
    let mut out = Grid2D::new(height, width, 0u32);
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
    let mut seq = 0u64;

    for (row, col, &label) in markers.grid().indexed_iter() {
        if label > 0 {
            debug_assert!(mask.is_set(row, col), "marker outside mask at ({row},{col})");
            out.set(row, col, label);
        }
    }

    let offsets = Connectivity::Eight.offsets();
    let push_neighbours =
        |out: &Grid2D<u32>, heap: &mut BinaryHeap<Candidate>, seq: &mut u64, row: usize, col: usize, label: u32| {
            for &(dr, dc) in offsets {
                let nr = row as isize + dr;
                let nc = col as isize + dc;
                if nr < 0 || nc < 0 || nr >= height as isize || nc >= width as isize {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                if mask.is_set(nr, nc) && *out.get(nr, nc) == 0 {
                    heap.push(Candidate {
                        energy: *energy.get(nr, nc),
                        seq: *seq,
                        row: nr,
                        col: nc,
                        label,
                    });
                    *seq += 1;
                }
            }
        };

    for row in 0..height {
        for col in 0..width {
            let label = *out.get(row, col);
            if label > 0 {
                push_neighbours(&out, &mut heap, &mut seq, row, col, label);
            }
        }
    }

    while let Some(c) = heap.pop() {
        if *out.get(c.row, c.col) != 0 {
            continue;
        }
        out.set(c.row, c.col, c.label);
        push_neighbours(&out, &mut heap, &mut seq, c.row, c.col, c.label);
    }

    // mask components no marker reached become instances of their own
    let mut max_label = 0u32;
    for &label in out.iter() {
        max_label = max_label.max(label);
    }
    let orphan_mask = BinaryMask::from_fn(height, width, |r, c| {
        mask.is_set(r, c) && *out.get(r, c) == 0
    });
    if orphan_mask.count_ones() > 0 {
        let orphans = connected_components(&orphan_mask, Connectivity::Eight);
        for (r, c, &label) in orphans.grid().indexed_iter() {
            if label > 0 {
                out.set(r, c, max_label + label);
            }
        }
    }

    InstanceMap::from_grid(out)
}
