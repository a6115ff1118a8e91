//! Maps LiDAR returns onto the camera's equirectangular grid.

use lidarfuse::geometry::{align_point, direction_to_pixel, project_cloud};
use lidarfuse::scene::{sample_lidar, LidarScanSpec, Scene};
use lidarfuse::{LidarPoint, RigExtrinsics};

fn main() -> lidarfuse::Result<()> {
    let rig = RigExtrinsics::default();

    // A single return 5 m ahead, 10° below the LiDAR horizon.
    let p = LidarPoint::new(5.0, 10f64.to_radians(), 0.0);
    let dir = align_point(&p, &rig)?;
    let px = direction_to_pixel(&dir, 720, 360);
    println!(
        "return at 5 m / 10°: camera latitude {:.4}°, longitude {:.4}°, pixel ({}, {}), depth {:.4} m",
        dir.latitude.to_degrees(),
        dir.longitude.to_degrees(),
        px.row,
        px.col,
        p.ground_distance()
    );

    // A whole scan of the box scene.
    let scene = Scene::builtin("floor+box@3m").unwrap();
    let cloud = sample_lidar(&scene, &rig, &LidarScanSpec::for_rig(&rig));
    let sparse = project_cloud(&cloud, &rig, 720, 360)?;
    let filled = sparse.as_slice().iter().flatten().count();
    let rows = (0..360).filter(|&r| (0..720).any(|c| sparse.get(r, c).is_some())).count();
    println!("{} returns fill {filled} pixels on {rows} rows", cloud.len());
    Ok(())
}
