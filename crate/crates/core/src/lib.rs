//! Building blocks for nuclear instance segmentation pipelines.
//!
//! The crate covers everything around the model itself:
//!
//! * regression/classification target generation from instance label maps
//!   ([`targets`]),
//! * gradient-based marker extraction and watershed post-processing that
//!   turns raw network output into labelled instances ([`postproc`]),
//! * reference implementations of the training losses ([`losses`]),
//! * segmentation and classification quality metrics ([`metrics`]),
//! * valid-convolution tile planning for large inputs ([`tiling`]),
//! * deterministic synthetic scenes for testing ([`synth`]),
//! * simple on-disk formats for maps, annotations and reports ([`io`]).
//!
//! All image-like data lives in row-major [`Grid2D`] containers indexed as
//! `(row, col)`. Computation is `f64` throughout; file formats store `f32`.

pub mod components;
pub mod grid;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod parallel;
pub mod postproc;
pub mod sobel;
pub mod synth;
pub mod targets;
pub mod tiling;
pub mod watershed;

pub use components::{
    connected_components, instance_stats, relabel_sequential, remove_small_instances,
    Connectivity, InstanceStats,
};
pub use grid::{BinaryMask, Grid2D, GridError, HoverMap, InstanceMap, TypeMap};
