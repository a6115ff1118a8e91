//! Gaussian-process resolution matching.
//!
//! Projected LiDAR depths are sparse on the image grid. Each `n × n` patch is
//! treated as a small regression problem: pixels with a depth are training
//! samples, empty pixels are queries, and the covariance between two pixels is
//! the product of a spatial closeness term and a grey-level similarity term.
//! Overlapping patch posteriors are blended by inverse-variance weighting.

mod baseline;
mod frame;
mod kernel;
mod posterior;

pub use baseline::{baseline_idw, baseline_nearest};
pub use frame::{
    blend, fuse_frame, fuse_frame_parallel, fuse_patch, patch_windows, window_starts,
    PatchEstimate, Window,
};
pub use kernel::{kernel, kernel_closeness, kernel_similarity, GpParams};
pub use posterior::{gp_posterior, Posterior, JITTER_MAX, JITTER_START};

use crate::error::Result;
use crate::geometry::{project_cloud, remove_occluded, LidarPoint, OcclusionFilter, RigExtrinsics};
use crate::raster::{DenseDepthMap, GreyImage, SparseDepthMap, UncertaintyMap};

/// Output of [`fuse_cloud`].
#[derive(Debug, Clone, PartialEq)]
pub struct FusedDepth {
    /// Projected returns that survived the occlusion filter.
    pub sparse: SparseDepthMap,
    pub dense: DenseDepthMap,
    pub variance: UncertaintyMap,
}

/// Projects a cloud onto the image grid, drops returns hidden from the camera
/// by parallax, and fills the frame by GP regression.
pub fn fuse_cloud(
    cloud: &[LidarPoint],
    grey: &GreyImage,
    rig: &RigExtrinsics,
    params: &GpParams,
    occlusion: &OcclusionFilter,
    threads: usize,
) -> Result<FusedDepth> {
    occlusion.validate()?;
    let (w, h) = grey.dims();
    let projected = project_cloud(cloud, rig, w, h)?;
    let sparse = remove_occluded(&projected, occlusion);
    let (dense, variance) = fuse_frame_parallel(&sparse, grey, params, threads)?;
    Ok(FusedDepth {
        sparse,
        dense,
        variance,
    })
}
