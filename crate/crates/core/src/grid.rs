//! Row-major 2-D containers and the domain newtypes built on them.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid dimensions must be positive, got {height}x{width}")]
    EmptyDimensions { height: usize, width: usize },
    #[error("data length {len} does not match {height}x{width}")]
    LengthMismatch {
        height: usize,
        width: usize,
        len: usize,
    },
    #[error("mask value {value} at ({row}, {col}) is not 0 or 1")]
    NotBinary { row: usize, col: usize, value: u8 },
    #[error("horizontal map is {h_dims:?} but vertical map is {v_dims:?}")]
    HoverDimsMismatch {
        h_dims: (usize, usize),
        v_dims: (usize, usize),
    },
}

/// Dense row-major grid indexed as `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T> Grid2D<T> {
    /// Wraps an existing buffer. `data.len()` must equal `height * width`
    /// and both dimensions must be positive.
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self, GridError> {
        if height == 0 || width == 0 {
            return Err(GridError::EmptyDimensions { height, width });
        }
        if data.len() != height * width {
            return Err(GridError::LengthMismatch {
                height,
                width,
                len: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        debug_assert!(row < self.height && col < self.width);
        &self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col] = value;
    }

    /// Flat index of `(row, col)`.
    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    /// `(row, col, &value)` in raster order.
    pub fn indexed_iter(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let width = self.width;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / width, i % width, v))
    }

    pub fn map<U, F: FnMut(&T) -> U>(&self, f: F) -> Grid2D<U> {
        Grid2D {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_dims<U>(&self, other: &Grid2D<U>) -> bool {
        self.height == other.height && self.width == other.width
    }
}

impl<T: Clone> Grid2D<T> {
    /// Grid filled with `fill`. Panics on zero dimensions: sizes are
    /// programmer input, not data.
    pub fn new(height: usize, width: usize, fill: T) -> Self {
        assert!(
            height > 0 && width > 0,
            "grid dimensions must be positive, got {height}x{width}"
        );
        Self {
            height,
            width,
            data: vec![fill; height * width],
        }
    }
}

/// Foreground mask; every cell is 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    grid: Grid2D<u8>,
}

impl BinaryMask {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            grid: Grid2D::new(height, width, 0),
        }
    }

    /// Validates that every cell is 0 or 1.
    pub fn from_grid(grid: Grid2D<u8>) -> Result<Self, GridError> {
        for (row, col, &value) in grid.indexed_iter() {
            if value > 1 {
                return Err(GridError::NotBinary { row, col, value });
            }
        }
        Ok(Self { grid })
    }

    /// 1 where `pred` holds.
    pub fn from_fn<F: FnMut(usize, usize) -> bool>(
        height: usize,
        width: usize,
        mut pred: F,
    ) -> Self {
        let mut mask = Self::zeros(height, width);
        for row in 0..height {
            for col in 0..width {
                if pred(row, col) {
                    mask.grid.set(row, col, 1);
                }
            }
        }
        mask
    }

    pub fn grid(&self) -> &Grid2D<u8> {
        &self.grid
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grid.dims()
    }

    #[inline]
    pub fn is_set(&self, row: usize, col: usize) -> bool {
        *self.grid.get(row, col) == 1
    }

    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.grid.set(row, col, u8::from(on));
    }

    pub fn count_ones(&self) -> usize {
        self.grid.iter().filter(|&&v| v == 1).count()
    }
}

/// Instance label map: 0 is background, positive labels are instances.
/// Labels need not be contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMap {
    grid: Grid2D<u32>,
}

impl InstanceMap {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            grid: Grid2D::new(height, width, 0),
        }
    }

    pub fn from_grid(grid: Grid2D<u32>) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &Grid2D<u32> {
        &self.grid
    }

    pub fn grid_mut(&mut self) -> &mut Grid2D<u32> {
        &mut self.grid
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grid.dims()
    }

    #[inline]
    pub fn label_at(&self, row: usize, col: usize) -> u32 {
        *self.grid.get(row, col)
    }

    /// Sorted, deduplicated positive labels present in the map.
    pub fn labels(&self) -> Vec<u32> {
        let mut labels: Vec<u32> = self.grid.iter().copied().filter(|&v| v > 0).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    /// Foreground mask (label > 0).
    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            grid: self.grid.map(|&v| u8::from(v > 0)),
        }
    }
}

/// Per-pixel class map: 0 is background, 1..=num_classes are classes.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeMap {
    grid: Grid2D<u8>,
}

impl TypeMap {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            grid: Grid2D::new(height, width, 0),
        }
    }

    pub fn from_grid(grid: Grid2D<u8>) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &Grid2D<u8> {
        &self.grid
    }

    pub fn grid_mut(&mut self) -> &mut Grid2D<u8> {
        &mut self.grid
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grid.dims()
    }

    #[inline]
    pub fn class_at(&self, row: usize, col: usize) -> u8 {
        *self.grid.get(row, col)
    }
}

/// Paired horizontal/vertical signed distance maps.
///
/// Ground-truth maps generated by [`crate::targets::hover_targets`] lie in
/// `[-1, 1]`; predicted maps from a regressor may overshoot slightly and are
/// accepted as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct HoverMap {
    horizontal: Grid2D<f64>,
    vertical: Grid2D<f64>,
}

impl HoverMap {
    pub fn new(horizontal: Grid2D<f64>, vertical: Grid2D<f64>) -> Result<Self, GridError> {
        if !horizontal.same_dims(&vertical) {
            return Err(GridError::HoverDimsMismatch {
                h_dims: horizontal.dims(),
                v_dims: vertical.dims(),
            });
        }
        Ok(Self {
            horizontal,
            vertical,
        })
    }

    pub fn horizontal(&self) -> &Grid2D<f64> {
        &self.horizontal
    }

    pub fn vertical(&self) -> &Grid2D<f64> {
        &self.vertical
    }

    pub fn height(&self) -> usize {
        self.horizontal.height()
    }

    pub fn width(&self) -> usize {
        self.horizontal.width()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.horizontal.dims()
    }
}
