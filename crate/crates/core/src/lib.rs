//! Fusion of sparse LiDAR returns with an equirectangular grey-level camera.
//!
//! The pipeline has three stages:
//!
//! 1. [`geometry`] maps each LiDAR return to a camera direction and pixel
//!    using the rig's four extrinsic offsets.
//! 2. [`gp`] fills the image grid with depth by patch-wise Gaussian-process
//!    regression whose covariance couples pixel distance and grey-level
//!    similarity, yielding a per-pixel variance alongside each estimate.
//! 3. [`freespace`] turns depth, image appearance and raw LiDAR returns into
//!    free-space masks and occupancy grids, and fuses the grids using the
//!    LiDAR's blind spot as the confidence boundary.
//!
//! [`scene`] renders analytic worlds with exact ground truth, [`metrics`]
//! scores masks and depth maps, and [`io`] reads and writes every on-disk
//! artifact.

pub mod commands;
pub mod error;
pub mod freespace;
pub mod geometry;
pub mod gp;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod scene;

pub use error::{Error, Result};
pub use geometry::{CameraDirection, LidarPoint, PixelCoord, PointCloud, RigExtrinsics};
pub use gp::GpParams;
pub use raster::{DenseDepthMap, GreyImage, Grid, SparseDepthMap, UncertaintyMap};
