//! Renders a shipped scene, scans it with a 16-beam LiDAR and writes the
//! camera image, ground truth and point cloud.
//!
//! cargo run --example simulate_scene -- "floor+box@3m" /tmp/sim

use std::path::PathBuf;

use lidarfuse::freespace::{Label, DEFAULT_HEIGHT_TOL};
use lidarfuse::io;
use lidarfuse::scene::{ground_truth_from_rendering, render_camera, sample_lidar, LidarScanSpec, Scene, BUILTIN_SCENES};
use lidarfuse::RigExtrinsics;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "floor+box@3m".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/simulate_scene".into()));
    let scene = Scene::builtin(&name).ok_or_else(|| format!("unknown scene {name:?}, try one of {BUILTIN_SCENES:?}"))?;

    let rig = RigExtrinsics::default();
    let rendering = render_camera(&scene, &rig, 720, 360);
    let truth = ground_truth_from_rendering(&scene, &rendering, DEFAULT_HEIGHT_TOL);
    let cloud = sample_lidar(&scene, &rig, &LidarScanSpec::for_rig(&rig));

    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("grey.pgm"), io::write_grey(&rendering.grey))?;
    std::fs::write(out.join("gt_depth.pfm"), io::write_depth(&rendering.depth))?;
    std::fs::write(out.join("gt_mask.pgm"), io::write_mask(&truth))?;
    std::fs::write(out.join("cloud.txt"), io::write_point_cloud(&cloud))?;

    let free = truth.as_slice().iter().filter(|l| **l == Label::Free).count();
    println!("{name}: {} returns, {free} free pixels, files in {}", cloud.len(), out.display());
    Ok(())
}
