//! Analytic worlds used as ground truth: a flat floor plus axis-aligned boxes,
//! rendered by an equirectangular camera and sampled by a multi-beam LiDAR.

mod trace;
mod training;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::freespace::{FreeSpaceMask, Label};
use crate::geometry::{pixel_to_direction, wrap_angle, LidarPoint, PixelCoord, PointCloud, RigExtrinsics};
use crate::raster::{DenseDepthMap, GreyImage, Grid};

pub use trace::{Hit, Surface};
pub use training::{
    train_image_classifier, training_corpus, training_scenes, MAX_CLASS_RATIO, MIN_OCCUPIED_FRACTION,
    TILE_STRIDE,
};

/// Axis-aligned box with a uniform grey level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub intensity: f64,
}

impl AaBox {
    pub fn new(min: [f64; 3], max: [f64; 3], intensity: f64) -> Self {
        Self {
            min,
            max,
            intensity,
        }
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }
}

/// Floor texture: square cells of side `cell_size` whose grey level deviates
/// from the floor intensity by up to `±amplitude`. Zero amplitude disables it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorTexture {
    pub cell_size: f64,
    pub amplitude: f64,
}

impl Default for FloorTexture {
    fn default() -> Self {
        Self {
            cell_size: 0.04,
            amplitude: 0.04,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub floor_height: f64,
    pub floor_intensity: f64,
    pub background_intensity: f64,
    pub floor_texture: FloorTexture,
    pub boxes: Vec<AaBox>,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            floor_height: 0.0,
            floor_intensity: 0.5,
            background_intensity: 0.95,
            floor_texture: FloorTexture::default(),
            boxes: Vec::new(),
        }
    }
}

/// Names of the scenes returned by [`Scene::builtin`].
pub const BUILTIN_SCENES: [&str; 4] = [
    "floor",
    "floor+box@3m",
    "ball-in-blindspot@1.5m",
    "wall@5m",
];

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.floor_intensity) || !unit(self.background_intensity) {
            return Err(Error::InvalidParameter(
                "scene intensities must lie in [0, 1]".into(),
            ));
        }
        if !(self.floor_texture.amplitude >= 0.0)
            || (self.floor_texture.amplitude > 0.0 && !(self.floor_texture.cell_size > 0.0))
        {
            return Err(Error::InvalidParameter(
                "floor texture needs a positive cell size and non-negative amplitude".into(),
            ));
        }
        for b in &self.boxes {
            if (0..3).any(|i| !(b.max[i] > b.min[i])) {
                return Err(Error::InvalidParameter(
                    "boxes must have positive volume".into(),
                ));
            }
            if !unit(b.intensity) {
                return Err(Error::InvalidParameter(
                    "box intensity must lie in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }

    /// One of the shipped scenes, by name.
    pub fn builtin(name: &str) -> Option<Scene> {
        let mut scene = Scene::default();
        match name {
            "floor" => {}
            "floor+box@3m" => scene
                .boxes
                .push(AaBox::new([3.0, -0.4, 0.0], [3.6, 0.4, 0.8], 0.2)),
            // A ball-sized obstacle that every beam passes over.
            "ball-in-blindspot@1.5m" => scene.boxes.push(AaBox::new(
                [1.425, -0.075, 0.0],
                [1.575, 0.075, 0.15],
                0.9,
            )),
            "wall@5m" => scene
                .boxes
                .push(AaBox::new([5.0, -10.0, 0.0], [5.3, 10.0, 2.5], 0.75)),
            _ => return None,
        }
        Some(scene)
    }

    /// First surface hit by a ray from `origin` along unit `dir`.
    pub fn trace(&self, origin: [f64; 3], dir: [f64; 3]) -> Option<Hit> {
        trace::first_hit(self, origin, dir)
    }

    /// Grey level of a hit surface, quantized to 8-bit levels.
    pub fn shade(&self, hit: Option<&Hit>) -> f64 {
        let v = match hit {
            None => self.background_intensity,
            Some(h) => match h.surface {
                Surface::Floor => self.floor_shade(h.point[0], h.point[1]),
                Surface::Box(i) => self.boxes[i].intensity,
            },
        };
        (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() / 255.0
    }

    fn floor_shade(&self, x: f64, y: f64) -> f64 {
        let t = self.floor_texture;
        if t.amplitude == 0.0 {
            return self.floor_intensity;
        }
        let i = (x / t.cell_size).floor() as i64;
        let j = (y / t.cell_size).floor() as i64;
        let u = cell_hash(i, j);
        self.floor_intensity + t.amplitude * (2.0 * u - 1.0)
    }
}

fn cell_hash(i: i64, j: i64) -> f64 {
    // splitmix64 finalizer on the packed cell index
    let mut z = (i as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Beam layout of a spinning multi-channel LiDAR.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarScanSpec {
    /// Channel latitudes β (rad, positive below horizontal).
    pub latitudes: Vec<f64>,
    /// Azimuth increment (rad).
    pub azimuth_step: f64,
    pub max_range: f64,
    /// Standard deviation of additive range noise (m); zero disables noise.
    pub range_noise_std: f64,
    pub noise_seed: u64,
}

impl LidarScanSpec {
    /// `channels` latitudes evenly spaced over `±halfangle`.
    pub fn evenly_spaced(channels: usize, halfangle: f64, azimuth_step: f64, max_range: f64) -> Self {
        let latitudes = if channels == 1 {
            vec![0.0]
        } else {
            (0..channels)
                .map(|k| -halfangle + 2.0 * halfangle * k as f64 / (channels - 1) as f64)
                .collect()
        };
        Self {
            latitudes,
            azimuth_step,
            max_range,
            range_noise_std: 0.0,
            noise_seed: 0,
        }
    }

    /// 16 channels over the rig's vertical field of view, 0.2° azimuth step.
    pub fn for_rig(rig: &RigExtrinsics) -> Self {
        Self::evenly_spaced(16, rig.lidar_vfov_halfangle, 0.2f64.to_radians(), rig.lidar_max_range)
    }

    pub fn validate(&self, rig: &RigExtrinsics) -> Result<()> {
        if self.latitudes.is_empty() {
            return Err(Error::InvalidParameter("scan needs at least one channel".into()));
        }
        if self
            .latitudes
            .iter()
            .any(|b| b.abs() > rig.lidar_vfov_halfangle * (1.0 + 1e-12))
        {
            return Err(Error::InvalidParameter(
                "channel latitude outside the LiDAR vertical field of view".into(),
            ));
        }
        if !(self.azimuth_step > 0.0) || !(self.max_range > 0.0) || !(self.range_noise_std >= 0.0) {
            return Err(Error::InvalidParameter(
                "azimuth step and max range must be positive, noise non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Azimuths in `(−π, π]`.
    pub fn azimuths(&self) -> Vec<f64> {
        let count = (2.0 * PI / self.azimuth_step).round().max(1.0) as usize;
        (1..=count)
            .map(|k| wrap_angle(-PI + k as f64 * self.azimuth_step))
            .collect()
    }
}

/// Output of [`render_camera`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rendering {
    pub grey: GreyImage,
    /// Forward ground-plane distance of each hit; unknown for background and
    /// for hits at or behind the LiDAR's lateral plane.
    pub depth: DenseDepthMap,
    /// Surface seen through each pixel.
    pub surface: Grid<Option<Surface>>,
    /// World point seen through each pixel.
    pub points: Grid<Option<[f64; 3]>>,
}

/// Renders an equirectangular frame from the camera center.
pub fn render_camera(scene: &Scene, rig: &RigExtrinsics, width: usize, height: usize) -> Rendering {
    let origin = rig.camera_center();
    let mut grey = Grid::filled(width, height, 0.0);
    let mut depth = DenseDepthMap::unknown(width, height);
    let mut surface = Grid::filled(width, height, None);
    let mut points = Grid::filled(width, height, None);
    for row in 0..height {
        for col in 0..width {
            let dir = pixel_to_direction(PixelCoord::new(row, col), width, height).unit_vector();
            let hit = scene.trace(origin, dir);
            grey.set(row, col, scene.shade(hit.as_ref()));
            if let Some(h) = hit {
                surface.set(row, col, Some(h.surface));
                points.set(row, col, Some(h.point));
                if h.point[0] > 0.0 {
                    depth.set(row, col, Some(h.point[0]));
                }
            }
        }
    }
    Rendering {
        grey,
        depth,
        surface,
        points,
    }
}

/// Casts every (channel, azimuth) beam from the LiDAR center and records the
/// first hit within range.
pub fn sample_lidar(scene: &Scene, rig: &RigExtrinsics, spec: &LidarScanSpec) -> PointCloud {
    let origin = rig.lidar_center();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
    let noise = (spec.range_noise_std > 0.0)
        .then(|| Normal::new(0.0, spec.range_noise_std).expect("finite std"));
    let azimuths = spec.azimuths();
    let mut cloud = Vec::with_capacity(spec.latitudes.len() * azimuths.len());
    for &beta in &spec.latitudes {
        for &gamma in &azimuths {
            let dir = [
                beta.cos() * gamma.cos(),
                beta.cos() * gamma.sin(),
                -beta.sin(),
            ];
            let Some(hit) = scene.trace(origin, dir) else {
                continue;
            };
            if hit.t > spec.max_range {
                continue;
            }
            let mut range = hit.t;
            if let Some(n) = &noise {
                range = (range + n.sample(&mut rng)).max(1e-3);
            }
            cloud.push(LidarPoint::new(range, beta, gamma));
        }
    }
    cloud
}

/// Free where the first hit is the floor (within `height_tol` of it),
/// occupied where it is a box, unknown where nothing is hit.
pub fn ground_truth_free_mask(
    scene: &Scene,
    rig: &RigExtrinsics,
    width: usize,
    height: usize,
    height_tol: f64,
) -> FreeSpaceMask {
    let origin = rig.camera_center();
    Grid::from_fn(width, height, |row, col| {
        let dir = pixel_to_direction(PixelCoord::new(row, col), width, height).unit_vector();
        label_hit(scene, scene.trace(origin, dir).as_ref(), height_tol)
    })
}

fn label_hit(scene: &Scene, hit: Option<&Hit>, height_tol: f64) -> Label {
    match hit {
        None => Label::Unknown,
        Some(h) => match h.surface {
            Surface::Floor if (h.point[2] - scene.floor_height).abs() <= height_tol => Label::Free,
            Surface::Floor => Label::Unknown,
            Surface::Box(_) => Label::Occupied,
        },
    }
}

/// Ground-truth mask derived from an existing rendering.
pub fn ground_truth_from_rendering(scene: &Scene, rendering: &Rendering, height_tol: f64) -> FreeSpaceMask {
    Grid::from_fn(rendering.surface.width(), rendering.surface.height(), |r, c| {
        let hit = rendering.surface.get(r, c).map(|s| Hit {
            t: 0.0,
            point: rendering.points.get(r, c).expect("point for every surface"),
            surface: s,
        });
        label_hit(scene, hit.as_ref(), height_tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{camera_ray_floor_hit, CameraDirection};

    fn rig() -> RigExtrinsics {
        RigExtrinsics::default()
    }

    #[test]
    fn builtins_exist_and_validate() {
        for name in BUILTIN_SCENES {
            Scene::builtin(name).unwrap().validate().unwrap();
        }
        assert!(Scene::builtin("nope").is_none());
    }

    #[test]
    fn floor_depth_matches_ray_plane() {
        let scene = Scene::builtin("floor").unwrap();
        let rig = rig();
        let r = render_camera(&scene, &rig, 144, 72);
        for row in 0..72 {
            for col in 0..144 {
                let dir = pixel_to_direction(PixelCoord::new(row, col), 144, 72);
                let expected = camera_ray_floor_hit(&dir, &rig);
                match (expected, r.surface.get(row, col)) {
                    (Some((x, _)), Some(Surface::Floor)) => {
                        if x > 0.0 {
                            let d = r.depth.value(row, col).unwrap();
                            assert!((d - x).abs() < 1e-9 * x.max(1.0), "{d} vs {x}");
                        }
                    }
                    (None, None) => assert!(dir.latitude <= 0.0),
                    other => panic!("row {row} col {col}: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn box_silhouette_is_symmetric_for_centered_camera() {
        let mut scene = Scene::builtin("floor").unwrap();
        scene.boxes.push(AaBox::new([2.5, -0.5, 0.0], [3.5, 0.5, 1.0], 0.2));
        let mut rig = rig();
        rig.lateral_offset = 0.0;
        // Odd width puts longitude 0 exactly on the center column.
        let (w, h) = (361, 120);
        let r = render_camera(&scene, &rig, w, h);
        let mid = (w - 1) / 2;
        for row in 0..h {
            for k in 1..=mid {
                let left = matches!(r.surface.get(row, mid - k), Some(Surface::Box(_)));
                let right = matches!(r.surface.get(row, mid + k), Some(Surface::Box(_)));
                assert_eq!(left, right, "row {row}, offset {k}");
            }
        }
    }

    #[test]
    fn floor_scan_ranges() {
        let scene = Scene::builtin("floor").unwrap();
        let rig = rig();
        let spec = LidarScanSpec::for_rig(&rig);
        let cloud = sample_lidar(&scene, &rig, &spec);
        assert!(!cloud.is_empty());
        for p in &cloud {
            assert!(p.latitude > 0.0, "upward beams never reach the floor");
            let expected = rig.lidar_height / p.latitude.sin();
            assert!((p.range - expected).abs() < 1e-9 * expected);
            assert!(p.range <= rig.lidar_max_range);
            assert!(p.latitude.abs() <= rig.lidar_vfov_halfangle + 1e-12);
        }
    }

    #[test]
    fn wall_return_from_lowest_positive_channel() {
        let mut scene = Scene::default();
        scene.floor_texture.amplitude = 0.0;
        scene.boxes.push(AaBox::new([3.0, -10.0, -1.0], [3.5, 10.0, 5.0], 0.5));
        let rig = rig();
        let spec = LidarScanSpec::for_rig(&rig);
        assert!(spec.latitudes.iter().all(|b| b.abs() > 1e-9));
        let cloud = sample_lidar(&scene, &rig, &spec);
        let one_deg = 1f64.to_radians();
        let p = cloud
            .iter()
            .find(|p| (p.latitude - one_deg).abs() < 1e-12 && p.longitude.abs() < 1e-9)
            .expect("straight-ahead return on the 1 degree channel");
        // 3 / cos(1°) from direct evaluation: 3.000456984131723
        assert!((p.range - 3.000_456_984_131_723).abs() < 1e-12);
    }

    #[test]
    fn ball_is_invisible_to_lidar() {
        let scene = Scene::builtin("ball-in-blindspot@1.5m").unwrap();
        let rig = rig();
        let cloud = sample_lidar(&scene, &rig, &LidarScanSpec::for_rig(&rig));
        for p in &cloud {
            assert!(p.height(&rig).abs() < 1e-9, "only floor returns expected");
        }
    }

    #[test]
    fn ground_truth_mask_labels() {
        let scene = Scene::builtin("floor+box@3m").unwrap();
        let rig = rig();
        let (w, h) = (180, 90);
        let mask = ground_truth_free_mask(&scene, &rig, w, h, 0.05);
        let exact = ground_truth_free_mask(&scene, &rig, w, h, 0.0);
        assert_eq!(mask, exact);
        let r = render_camera(&scene, &rig, w, h);
        assert_eq!(ground_truth_from_rendering(&scene, &r, 0.05), mask);
        for row in 0..h {
            for col in 0..w {
                let dir = pixel_to_direction(PixelCoord::new(row, col), w, h);
                let label = *mask.get(row, col);
                match r.surface.get(row, col) {
                    Some(Surface::Box(_)) => assert_eq!(label, Label::Occupied),
                    Some(Surface::Floor) => assert_eq!(label, Label::Free),
                    None => {
                        assert_eq!(label, Label::Unknown);
                        assert!(dir.latitude <= 0.0);
                    }
                }
            }
        }
        // The box hides a strip of floor straight ahead.
        let ahead = CameraDirection {
            latitude: 0.12,
            longitude: 0.0,
        };
        let px = crate::geometry::direction_to_pixel(&ahead, w, h);
        assert_eq!(*mask.get(px.row, px.col), Label::Occupied);
    }

    #[test]
    fn rendering_is_deterministic_and_quantized() {
        let scene = Scene::builtin("floor+box@3m").unwrap();
        let a = render_camera(&scene, &rig(), 90, 45);
        let b = render_camera(&scene, &rig(), 90, 45);
        assert_eq!(a, b);
        for v in a.grey.as_slice() {
            let q = v * 255.0;
            assert!((q - q.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn noisy_scan_is_reproducible() {
        let scene = Scene::builtin("wall@5m").unwrap();
        let rig = rig();
        let mut spec = LidarScanSpec::for_rig(&rig);
        spec.range_noise_std = 0.02;
        spec.noise_seed = 7;
        let a = sample_lidar(&scene, &rig, &spec);
        let b = sample_lidar(&scene, &rig, &spec);
        assert_eq!(a, b);
        spec.range_noise_std = 0.0;
        let clean = sample_lidar(&scene, &rig, &spec);
        assert_eq!(a.len(), clean.len());
        assert!(a.iter().zip(&clean).any(|(n, c)| n.range != c.range));
    }
}
