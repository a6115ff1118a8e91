//! GP fusion against nearest-neighbour and inverse-distance interpolation,
//! scored where each column is bracketed by LiDAR samples.

use lidarfuse::geometry::{project_cloud, remove_occluded, OcclusionFilter};
use lidarfuse::gp::{baseline_idw, baseline_nearest, fuse_frame};
use lidarfuse::metrics::{column_coverage_mask, depth_rmse};
use lidarfuse::scene::{render_camera, sample_lidar, LidarScanSpec, Scene, BUILTIN_SCENES};
use lidarfuse::{GpParams, RigExtrinsics};

fn main() -> lidarfuse::Result<()> {
    let rig = RigExtrinsics::default();
    println!("{:<24} {:>8} {:>8} {:>8}", "scene", "gp", "nearest", "idw");
    for name in BUILTIN_SCENES {
        let scene = Scene::builtin(name).unwrap();
        let rendering = render_camera(&scene, &rig, 720, 360);
        let cloud = sample_lidar(&scene, &rig, &LidarScanSpec::for_rig(&rig));
        let sparse = remove_occluded(&project_cloud(&cloud, &rig, 720, 360)?, &OcclusionFilter::default());
        let valid = column_coverage_mask(&sparse);
        let (gp, _) = fuse_frame(&sparse, &rendering.grey, &GpParams::default())?;
        let rmse = |m| depth_rmse(m, &rendering.depth, &valid);
        println!(
            "{name:<24} {:>8.4} {:>8.4} {:>8.4}",
            rmse(&gp)?,
            rmse(&baseline_nearest(&sparse)?)?,
            rmse(&baseline_idw(&sparse, 2.0, 8.0)?)?
        );
    }
    Ok(())
}
