//! Free-space mask from fused depth: a pixel is free when its depth puts the
//! surface on the floor and the GP is confident about it.

use lidarfuse::freespace::{ground_mask_from_depth, Label, DEFAULT_HEIGHT_TOL, DEFAULT_UNC_TOL};
use lidarfuse::geometry::OcclusionFilter;
use lidarfuse::gp::fuse_cloud;
use lidarfuse::metrics::mask_metrics;
use lidarfuse::scene::{ground_truth_from_rendering, render_camera, sample_lidar, LidarScanSpec, Scene};
use lidarfuse::{GpParams, RigExtrinsics};

fn main() -> lidarfuse::Result<()> {
    let rig = RigExtrinsics::default();
    let scene = Scene::builtin("floor+box@3m").unwrap();
    let rendering = render_camera(&scene, &rig, 720, 360);
    let truth = ground_truth_from_rendering(&scene, &rendering, DEFAULT_HEIGHT_TOL);
    let cloud = sample_lidar(&scene, &rig, &LidarScanSpec::for_rig(&rig));
    let fused = fuse_cloud(&cloud, &rendering.grey, &rig, &GpParams::default(), &OcclusionFilter::default(), 1)?;

    for unc_tol in [DEFAULT_UNC_TOL, 0.01, 1e-4] {
        let mask = ground_mask_from_depth(&fused.dense, &fused.variance, &rig, DEFAULT_HEIGHT_TOL, unc_tol)?;
        let count = |l| mask.as_slice().iter().filter(|m| **m == l).count();
        // Only pixels the mask commits to are scored.
        let scored = truth.indexed().map(|(r, c, t)| if mask.get(r, c).is_known() { *t } else { Label::Unknown });
        let scored = lidarfuse::Grid::from_vec(720, 360, scored.collect())?;
        let m = mask_metrics(&mask, &scored)?;
        println!(
            "unc_tol {unc_tol:>7}: free {:>6} occupied {:>6} unknown {:>6} | {}",
            count(Label::Free),
            count(Label::Occupied),
            count(Label::Unknown),
            m.summary_line()
        );
    }
    Ok(())
}
