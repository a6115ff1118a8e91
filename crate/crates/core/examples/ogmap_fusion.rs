//! Builds LiDAR and image occupancy grids for the ball-in-blind-spot scene
//! and fuses them. The LiDAR passes over the ball; the camera sees it.

use lidarfuse::freespace::{
    blind_radius, blind_spot_mask, classify_image, fuse_ogmaps_conservative, fuse_ogmaps_uncertainty, image_ogmap,
    lidar_ogmap, GridGeometry, Label, OgMap, DEFAULT_HEIGHT_TOL,
};
use lidarfuse::scene::{render_camera, sample_lidar, train_image_classifier, LidarScanSpec, Scene};
use lidarfuse::RigExtrinsics;

fn summary(name: &str, map: &OgMap, cell: (usize, usize)) {
    println!(
        "{name:<13} free {:>6} occupied {:>4} unknown {:>6}  ball cell {:?}",
        map.count(Label::Free),
        map.count(Label::Occupied),
        map.count(Label::Unknown),
        map.get(cell.0, cell.1)
    );
}

fn main() -> lidarfuse::Result<()> {
    let rig = RigExtrinsics::default();
    let geometry = GridGeometry::default();
    println!("blind radius {:.4} m", blind_radius(&rig));

    let scene = Scene::builtin("ball-in-blindspot@1.5m").unwrap();
    let rendering = render_camera(&scene, &rig, 720, 360);
    let cloud = sample_lidar(&scene, &rig, &LidarScanSpec::for_rig(&rig));
    let clf = train_image_classifier(&rig, 720, 360)?;

    let lidar = lidar_ogmap(&cloud, &rig, &geometry, DEFAULT_HEIGHT_TOL)?;
    let image = image_ogmap(&classify_image(&rendering.grey, &clf), &rig, &geometry)?;
    let fused = fuse_ogmaps_uncertainty(&lidar, &image, &blind_spot_mask(&rig, &geometry))?;
    let conservative = fuse_ogmaps_conservative(&lidar, &image)?;

    let cell = geometry.cell_of(1.5, 0.0).unwrap();
    summary("lidar", &lidar, cell);
    summary("image", &image, cell);
    summary("uncertainty", &fused, cell);
    summary("conservative", &conservative, cell);
    Ok(())
}
