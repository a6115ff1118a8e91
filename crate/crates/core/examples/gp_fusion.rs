//! Densifies a sparse LiDAR projection with patch-wise GP regression and
//! reports the per-pixel variance.

use std::time::Instant;

use lidarfuse::geometry::OcclusionFilter;
use lidarfuse::gp::fuse_cloud;
use lidarfuse::metrics::{column_coverage_mask, depth_rmse};
use lidarfuse::scene::{render_camera, sample_lidar, LidarScanSpec, Scene};
use lidarfuse::{GpParams, RigExtrinsics};

fn main() -> lidarfuse::Result<()> {
    let threads = std::env::args().nth(1).map_or(1, |t| t.parse().expect("thread count"));
    let rig = RigExtrinsics::default();
    let scene = Scene::builtin("floor+box@3m").unwrap();
    let rendering = render_camera(&scene, &rig, 720, 360);
    let cloud = sample_lidar(&scene, &rig, &LidarScanSpec::for_rig(&rig));

    let start = Instant::now();
    let fused = fuse_cloud(
        &cloud,
        &rendering.grey,
        &rig,
        &GpParams::default(),
        &OcclusionFilter::default(),
        threads,
    )?;
    let elapsed = start.elapsed();

    let coverage = column_coverage_mask(&fused.sparse);
    let rmse = depth_rmse(&fused.dense, &rendering.depth, &coverage)?;
    let known = fused.dense.known.as_slice().iter().filter(|k| **k).count();
    let mut var: Vec<f64> = fused
        .variance
        .indexed()
        .filter(|(r, c, _)| *fused.dense.known.get(*r, *c))
        .map(|(_, _, v)| *v)
        .collect();
    var.sort_by(f64::total_cmp);
    println!("fused {known} pixels in {elapsed:.2?} on {threads} thread(s)");
    println!("depth RMSE between scan rings: {rmse:.4} m");
    println!(
        "variance quartiles: {:.2e} {:.2e} {:.2e}",
        var[var.len() / 4],
        var[var.len() / 2],
        var[3 * var.len() / 4]
    );
    Ok(())
}
