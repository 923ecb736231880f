//! Seeded synthetic nuclei scenes for self-contained testing.
//!
//! Rasterizes random ellipses onto a label canvas. Later ellipses may
//! overlap earlier ones up to a configured fraction of their own area;
//! contested pixels stay with the earlier label, so instances remain
//! disjoint but can share long boundary seams — the situation the
//! watershed has to resolve.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid2D, InstanceMap, TypeMap};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("radius range ({0}, {1}) is empty or non-positive")]
    BadRadiusRange(f64, f64),
    #[error("overlap fraction {0} not in [0, 1]")]
    BadOverlap(f64),
    #[error("class count must be at least 1")]
    NoClasses,
    #[error("{height}x{width} image cannot fit radius-{radius} nuclei")]
    ImageTooSmall {
        height: usize,
        width: usize,
        radius: f64,
    },
    #[error("placed {placed} of {requested} nuclei before running out of retries")]
    PlacementFailed { placed: usize, requested: usize },
}

/// Parameters for one generated scene. Identical configs (same seed)
/// produce bit-identical scenes on every platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    pub count: usize,
    /// Semi-axis range in pixels, inclusive.
    pub radius_range: (f64, f64),
    /// Max fraction of a new nucleus's area allowed to fall on
    /// already-claimed pixels.
    pub overlap: f64,
    /// Number of foreground classes; types drawn uniformly.
    pub classes: u8,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            height: 256,
            width: 256,
            count: 20,
            radius_range: (5.0, 11.0),
            overlap: 0.15,
            classes: 4,
            seed: 0,
        }
    }
}

/// One generated scene plus the ground truth an evaluation needs.
#[derive(Debug, Clone)]
pub struct SynthScene {
    pub instances: InstanceMap,
    pub types: TypeMap,
    /// Centroid (row, col) of each instance's final pixel set.
    pub centroids: BTreeMap<u32, (f64, f64)>,
    /// Class id of each instance.
    pub classes: BTreeMap<u32, u8>,
}

const PLACEMENT_RETRIES: usize = 100;

pub fn synth_scene(cfg: &SynthConfig) -> Result<SynthScene, SynthError> {
    let (r_lo, r_hi) = cfg.radius_range;
    if !(r_lo > 0.0 && r_hi >= r_lo) {
        return Err(SynthError::BadRadiusRange(r_lo, r_hi));
    }
    if !(0.0..=1.0).contains(&cfg.overlap) {
        return Err(SynthError::BadOverlap(cfg.overlap));
    }
    if cfg.classes == 0 {
        return Err(SynthError::NoClasses);
    }
    let pad = r_hi.ceil() as usize + 1;
    if cfg.count > 0 && (cfg.height < 2 * pad + 1 || cfg.width < 2 * pad + 1) {
        return Err(SynthError::ImageTooSmall {
            height: cfg.height,
            width: cfg.width,
            radius: r_hi,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut canvas = Grid2D::new(cfg.height, cfg.width, 0u32);
    let mut classes = BTreeMap::new();
    let mut centroids = BTreeMap::new();

    for n in 0..cfg.count {
        let label = (n + 1) as u32;
        let mut placed = false;
        for _ in 0..PLACEMENT_RETRIES {
            let a = rng.random_range(r_lo..=r_hi);
            let b = rng.random_range(r_lo..=r_hi);
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            let cr = rng.random_range(pad..cfg.height - pad);
            let cc = rng.random_range(pad..cfg.width - pad);
            let pixels = rasterize_ellipse(cr, cc, a, b, theta);
            if pixels.is_empty() {
                continue;
            }
            let contested = pixels
                .iter()
                .filter(|&&(r, c)| *canvas.get(r, c) != 0)
                .count();
            let free = pixels.len() - contested;
            if free == 0 || contested as f64 / pixels.len() as f64 > cfg.overlap {
                continue;
            }
            let mut sum_r = 0.0;
            let mut sum_c = 0.0;
            for &(r, c) in &pixels {
                if *canvas.get(r, c) == 0 {
                    canvas.set(r, c, label);
                    sum_r += r as f64;
                    sum_c += c as f64;
                }
            }
            centroids.insert(label, (sum_r / free as f64, sum_c / free as f64));
            classes.insert(label, rng.random_range(1..=cfg.classes));
            placed = true;
            break;
        }
        if !placed {
            return Err(SynthError::PlacementFailed {
                placed: n,
                requested: cfg.count,
            });
        }
    }

    let mut type_grid = Grid2D::new(cfg.height, cfg.width, 0u8);
    for (r, c, &label) in canvas.indexed_iter() {
        if label != 0 {
            type_grid.set(r, c, classes[&label]);
        }
    }
    Ok(SynthScene {
        instances: InstanceMap::from_grid(canvas),
        types: TypeMap::from_grid(type_grid),
        centroids,
        classes,
    })
}

/// Pixel set of an ellipse with semi-axes `a`, `b` rotated by `theta`
/// about (`cr`, `cc`), in raster order.
fn rasterize_ellipse(cr: usize, cc: usize, a: f64, b: f64, theta: f64) -> Vec<(usize, usize)> {
    let reach = a.max(b).ceil() as isize;
    let (sin, cos) = theta.sin_cos();
    let mut pixels = Vec::new();
    for dr in -reach..=reach {
        for dc in -reach..=reach {
            let (y, x) = (dr as f64, dc as f64);
            let u = (x * cos + y * sin) / a;
            let v = (-x * sin + y * cos) / b;
            if u * u + v * v <= 1.0 {
                let r = cr as isize + dr;
                let c = cc as isize + dc;
                pixels.push((r as usize, c as usize));
            }
        }
    }
    pixels
}
