//! Separable Sobel derivatives with mirrored borders.

use crate::grid::Grid2D;

/// Supported Sobel apertures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SobelKsize {
    #[default]
    Three,
    Five,
}

impl SobelKsize {
    pub fn from_int(k: u32) -> Option<Self> {
        match k {
            3 => Some(SobelKsize::Three),
            5 => Some(SobelKsize::Five),
            _ => None,
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            SobelKsize::Three => 3,
            SobelKsize::Five => 5,
        }
    }

    fn smooth(self) -> &'static [f64] {
        match self {
            SobelKsize::Three => &[1.0, 2.0, 1.0],
            SobelKsize::Five => &[1.0, 4.0, 6.0, 4.0, 1.0],
        }
    }

    fn derive(self) -> &'static [f64] {
        match self {
            SobelKsize::Three => &[-1.0, 0.0, 1.0],
            SobelKsize::Five => &[-1.0, -2.0, 0.0, 2.0, 1.0],
        }
    }
}

/// Mirror an out-of-range index back into `0..n` without repeating the
/// border sample (`-1 -> 1`, `n -> n-2`).
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = (2 * (n - 1)) as isize;
    let mut i = i.rem_euclid(period);
    if i >= n as isize {
        i = period - i;
    }
    i as usize
}

fn convolve_rows(input: &Grid2D<f64>, kernel: &[f64]) -> Grid2D<f64> {
    let (height, width) = input.dims();
    let half = (kernel.len() / 2) as isize;
    let mut out = Grid2D::new(height, width, 0.0);
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (j, &k) in kernel.iter().enumerate() {
                let cc = reflect_index(c as isize + j as isize - half, width);
                acc += k * input.get(r, cc);
            }
            out.set(r, c, acc);
        }
    }
    out
}

fn convolve_cols(input: &Grid2D<f64>, kernel: &[f64]) -> Grid2D<f64> {
    let (height, width) = input.dims();
    let half = (kernel.len() / 2) as isize;
    let mut out = Grid2D::new(height, width, 0.0);
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (i, &k) in kernel.iter().enumerate() {
                let rr = reflect_index(r as isize + i as isize - half, height);
                acc += k * input.get(rr, c);
            }
            out.set(r, c, acc);
        }
    }
    out
}

/// Horizontal derivative: positive where values increase with column.
/// Computed as a correlation, derivative along columns and binomial
/// smoothing along rows.
pub fn sobel_x(input: &Grid2D<f64>, ksize: SobelKsize) -> Grid2D<f64> {
    convolve_cols(&convolve_rows(input, ksize.derive()), ksize.smooth())
}

/// Vertical derivative: positive where values increase with row.
pub fn sobel_y(input: &Grid2D<f64>, ksize: SobelKsize) -> Grid2D<f64> {
    convolve_cols(&convolve_rows(input, ksize.smooth()), ksize.derive())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense 2-D correlation against the full outer-product kernel; the
    /// reference the separable fast path must match.
    fn sobel_dense(input: &Grid2D<f64>, ksize: SobelKsize, horizontal: bool) -> Grid2D<f64> {
        let (row_k, col_k) = if horizontal {
            (ksize.smooth(), ksize.derive())
        } else {
            (ksize.derive(), ksize.smooth())
        };
        let (height, width) = input.dims();
        let half = (row_k.len() / 2) as isize;
        let mut out = Grid2D::new(height, width, 0.0);
        for r in 0..height {
            for c in 0..width {
                let mut acc = 0.0;
                for (i, &ki) in row_k.iter().enumerate() {
                    for (j, &kj) in col_k.iter().enumerate() {
                        let rr = reflect_index(r as isize + i as isize - half, height);
                        let cc = reflect_index(c as isize + j as isize - half, width);
                        acc += ki * kj * input.get(rr, cc);
                    }
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    #[test]
    fn reflect_examples() {
        assert_eq!(reflect_index(-1, 5), 1);
        assert_eq!(reflect_index(-2, 5), 2);
        assert_eq!(reflect_index(5, 5), 3);
        assert_eq!(reflect_index(6, 5), 2);
        assert_eq!(reflect_index(2, 5), 2);
        assert_eq!(reflect_index(-3, 1), 0);
    }

    #[test]
    fn constant_input_gives_zero() {
        let g = Grid2D::new(4, 6, 2.5);
        assert!(sobel_x(&g, SobelKsize::Three).iter().all(|&v| v == 0.0));
        assert!(sobel_y(&g, SobelKsize::Five).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn column_ramp_has_constant_interior_gradient() {
        let mut g = Grid2D::new(3, 5, 0.0);
        for r in 0..3 {
            for c in 0..5 {
                g.set(r, c, c as f64);
            }
        }
        let gx = sobel_x(&g, SobelKsize::Three);
        for r in 0..3 {
            // interior: (1+2+1) * ((c+1) - (c-1)) = 8
            for c in 1..4 {
                assert_eq!(*gx.get(r, c), 8.0);
            }
            // mirrored borders see a symmetric neighbourhood
            assert_eq!(*gx.get(r, 0), 0.0);
            assert_eq!(*gx.get(r, 4), 0.0);
        }
        assert!(sobel_y(&g, SobelKsize::Three).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_edge_peaks_on_both_sides() {
        let mut g = Grid2D::new(1, 4, 0.0);
        g.set(0, 2, 1.0);
        g.set(0, 3, 1.0);
        let gx = sobel_x(&g, SobelKsize::Three);
        assert_eq!(*gx.get(0, 1), 4.0);
        assert_eq!(*gx.get(0, 2), 4.0);
    }

    fn arb_grid() -> impl Strategy<Value = Grid2D<f64>> {
        (1usize..9, 1usize..9).prop_flat_map(|(h, w)| {
            proptest::collection::vec(-10.0f64..10.0, h * w)
                .prop_map(move |data| Grid2D::from_vec(h, w, data).unwrap())
        })
    }

    proptest! {
        /// Separable implementation equals the dense 2-D correlation.
        #[test]
        fn separable_matches_dense(g in arb_grid()) {
            for ksize in [SobelKsize::Three, SobelKsize::Five] {
                let fast = sobel_x(&g, ksize);
                let dense = sobel_dense(&g, ksize, true);
                for (a, b) in fast.iter().zip(dense.iter()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
                let fast = sobel_y(&g, ksize);
                let dense = sobel_dense(&g, ksize, false);
                for (a, b) in fast.iter().zip(dense.iter()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }

        /// x/y derivatives swap under transposition.
        #[test]
        fn transpose_symmetry(g in arb_grid()) {
            let (h, w) = g.dims();
            let mut t = Grid2D::new(w, h, 0.0);
            for (r, c, &v) in g.indexed_iter() {
                t.set(c, r, v);
            }
            let gy = sobel_y(&g, SobelKsize::Three);
            let gx_t = sobel_x(&t, SobelKsize::Three);
            for (r, c, &v) in gy.indexed_iter() {
                prop_assert!((v - gx_t.get(c, r)).abs() < 1e-9);
            }
        }
    }
}
