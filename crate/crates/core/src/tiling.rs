//! Sliding-window tile planning for valid-convolution inference.
//!
//! A network that maps a 270×270 input window to an 80×80 output loses a
//! 95-pixel margin on every side. To run it over an arbitrarily large
//! image the planner lays output rectangles edge to edge (clipping at the
//! borders) and pairs each with the input window that produces it; input
//! windows overlap and may extend past the image, where mirrored padding
//! fills in. Predicted maps are stitched back into whole-image maps
//! *before* post-processing, so instances straddling tile seams are
//! segmented by a single watershed instead of being merged across tiles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid2D;
use crate::sobel::reflect_index;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TilingError {
    #[error("input size {input} must exceed output size {output} by an even margin")]
    BadGeometry { input: usize, output: usize },
    #[error("missing output for tile ({row}, {col})")]
    MissingTile { row: usize, col: usize },
    #[error("duplicate output for tile ({row}, {col})")]
    DuplicateTile { row: usize, col: usize },
    #[error("tile ({row}, {col}) output is {got_h}x{got_w}, expected {want_h}x{want_w}")]
    TileDims {
        row: usize,
        col: usize,
        got_h: usize,
        got_w: usize,
        want_h: usize,
        want_w: usize,
    },
    #[error("tile ({row}, {col}) has {got} channels, expected {want}")]
    ChannelCount {
        row: usize,
        col: usize,
        got: usize,
        want: usize,
    },
    #[error("tile ({row}, {col}) is not part of the plan")]
    UnknownTile { row: usize, col: usize },
}

/// Input/output window sizes of the inference network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGeometry {
    pub input_size: usize,
    pub output_size: usize,
}

impl TileGeometry {
    pub fn new(input_size: usize, output_size: usize) -> Result<Self, TilingError> {
        if input_size <= output_size || (input_size - output_size) % 2 != 0 || output_size == 0 {
            return Err(TilingError::BadGeometry {
                input: input_size,
                output: output_size,
            });
        }
        Ok(Self {
            input_size,
            output_size,
        })
    }

    /// Context lost per side: `(input - output) / 2`.
    pub fn margin(&self) -> usize {
        (self.input_size - self.output_size) / 2
    }
}

impl Default for TileGeometry {
    fn default() -> Self {
        Self {
            input_size: 270,
            output_size: 80,
        }
    }
}

/// Axis-aligned rectangle in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

/// Input window; `top`/`left` go negative when the window hangs past
/// the image border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub top: i64,
    pub left: i64,
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    /// Position in the tile grid, (row, col).
    pub index: (usize, usize),
    /// Where this tile's prediction lands in the stitched map.
    pub output: Rect,
    /// The pixels the network must see to produce `output`.
    pub input: Window,
}

/// Complete tiling of one image: output rectangles are disjoint and
/// cover it exactly; each input window is its output rectangle grown by
/// the margin on all sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilePlan {
    pub image_height: usize,
    pub image_width: usize,
    pub geometry: TileGeometry,
    pub tiles: Vec<Tile>,
}

/// Lays out `ceil(height/output) x ceil(width/output)` tiles in row-major
/// order. Edge tiles get clipped output rectangles; their input windows
/// shrink with them, so every window is output + 2*margin per axis.
pub fn plan_tiles(height: usize, width: usize, geometry: TileGeometry) -> TilePlan {
    assert!(height > 0 && width > 0, "image must be non-empty");
    let out = geometry.output_size;
    let margin = geometry.margin() as i64;
    let rows = height.div_ceil(out);
    let cols = width.div_ceil(out);
    let mut tiles = Vec::with_capacity(rows * cols);
    for tr in 0..rows {
        for tc in 0..cols {
            let top = tr * out;
            let left = tc * out;
            let output = Rect {
                top,
                left,
                height: out.min(height - top),
                width: out.min(width - left),
            };
            let input = Window {
                top: top as i64 - margin,
                left: left as i64 - margin,
                height: output.height + 2 * margin as usize,
                width: output.width + 2 * margin as usize,
            };
            tiles.push(Tile {
                index: (tr, tc),
                output,
                input,
            });
        }
    }
    TilePlan {
        image_height: height,
        image_width: width,
        geometry,
        tiles,
    }
}

/// Copies one tile's input window out of a channel, mirroring
/// out-of-bounds coordinates back into the image.
pub fn extract_window<T: Copy>(channel: &Grid2D<T>, window: Window) -> Grid2D<T> {
    let (h, w) = channel.dims();
    let mut rows = Vec::with_capacity(window.height);
    let mut cols = Vec::with_capacity(window.width);
    for r in 0..window.height {
        rows.push(reflect_index(window.top as isize + r as isize, h));
    }
    for c in 0..window.width {
        cols.push(reflect_index(window.left as isize + c as isize, w));
    }
    let mut data = Vec::with_capacity(window.height * window.width);
    for &sr in &rows {
        for &sc in &cols {
            data.push(*channel.get(sr, sc));
        }
    }
    Grid2D::from_vec(window.height, window.width, data).expect("window dims are positive")
}

/// [`extract_window`] across a whole channel stack.
pub fn extract_tile(channels: &[Grid2D<f64>], tile: &Tile) -> Vec<Grid2D<f64>> {
    channels
        .iter()
        .map(|ch| extract_window(ch, tile.input))
        .collect()
}

/// Reassembles per-tile output stacks into full-image maps.
///
/// Expects exactly one output per planned tile with the tile's clipped
/// output dimensions; rectangles are disjoint so placement is a straight
/// copy, no blending.
pub fn stitch_maps(
    tile_outputs: &[(Tile, Vec<Grid2D<f64>>)],
    plan: &TilePlan,
) -> Result<Vec<Grid2D<f64>>, TilingError> {
    let channels = tile_outputs.first().map_or(0, |(_, stack)| stack.len());
    let mut out = vec![Grid2D::new(plan.image_height, plan.image_width, 0.0); channels];
    let mut seen = vec![false; plan.tiles.len()];
    let cols = plan.image_width.div_ceil(plan.geometry.output_size);
    for (tile, stack) in tile_outputs {
        let (row, col) = tile.index;
        let slot = row * cols + col;
        match plan.tiles.get(slot) {
            Some(planned) if planned.index == tile.index => {}
            _ => return Err(TilingError::UnknownTile { row, col }),
        }
        if seen[slot] {
            return Err(TilingError::DuplicateTile { row, col });
        }
        seen[slot] = true;
        if stack.len() != channels {
            return Err(TilingError::ChannelCount {
                row,
                col,
                got: stack.len(),
                want: channels,
            });
        }
        let rect = plan.tiles[slot].output;
        for (target, source) in out.iter_mut().zip(stack) {
            if source.dims() != (rect.height, rect.width) {
                return Err(TilingError::TileDims {
                    row,
                    col,
                    got_h: source.height(),
                    got_w: source.width(),
                    want_h: rect.height,
                    want_w: rect.width,
                });
            }
            for (r, c, &v) in source.indexed_iter() {
                target.set(rect.top + r, rect.left + c, v);
            }
        }
    }
    if let Some(slot) = seen.iter().position(|&s| !s) {
        let (row, col) = plan.tiles[slot].index;
        return Err(TilingError::MissingTile { row, col });
    }
    Ok(out)
}
