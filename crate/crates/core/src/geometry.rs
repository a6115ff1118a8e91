//! Closed-form alignment of LiDAR polar returns with equirectangular camera
//! directions and pixels.
//!
//! Frame conventions used throughout the crate:
//!
//! * The world origin is the floor point directly below the LiDAR center; `x`
//!   points forward along the shared sensor axis, `z` points up.
//! * The LiDAR center sits at `(0, 0, H_L)`. The camera center sits at
//!   `(Δx, −Δy, H_C)`: `Δx` forward of the LiDAR, and `Δy` to the side that
//!   makes a positive `Δy` add to the camera longitude numerator.
//! * Latitudes (`β` for the LiDAR, `α` for the camera) are positive *below* the
//!   sensor's horizontal plane, so an object at height `H_O` satisfies
//!   `H_O = H_L − d_L·sin β = H_C − r·sin α`.
//! * Longitudes are measured from the forward axis towards `+y` and live in
//!   `(−π, π]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Threshold below which both terms of the longitude ratio count as zero.
const DEGENERATE_EPS: f64 = 1e-12;

/// Extrinsic parameters of the LiDAR/camera rig plus LiDAR coverage limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigExtrinsics {
    /// Camera height above the floor `H_C` (m).
    pub cam_height: f64,
    /// LiDAR height above the floor `H_L` (m).
    pub lidar_height: f64,
    /// Forward displacement `Δx` of the camera relative to the LiDAR (m).
    pub frontal_offset: f64,
    /// Lateral displacement `Δy` (m); the camera center is at `y = −Δy`.
    pub lateral_offset: f64,
    /// Half of the LiDAR vertical field of view (rad).
    pub lidar_vfov_halfangle: f64,
    /// Maximum LiDAR range (m).
    pub lidar_max_range: f64,
}

impl Default for RigExtrinsics {
    /// Quad-bike test bed measurements with a VLP-16 LiDAR.
    fn default() -> Self {
        Self {
            cam_height: 0.55,
            lidar_height: 0.61,
            frontal_offset: 0.5,
            lateral_offset: 0.07,
            lidar_vfov_halfangle: 15f64.to_radians(),
            lidar_max_range: 100.0,
        }
    }
}

impl RigExtrinsics {
    /// Co-located sensors at equal height: alignment is the identity.
    pub fn identity(height: f64) -> Self {
        Self {
            cam_height: height,
            lidar_height: height,
            frontal_offset: 0.0,
            lateral_offset: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.cam_height,
            self.lidar_height,
            self.frontal_offset,
            self.lateral_offset,
            self.lidar_vfov_halfangle,
            self.lidar_max_range,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("rig values must be finite".into()));
        }
        if self.cam_height <= 0.0 || self.lidar_height <= 0.0 {
            return Err(Error::InvalidParameter(
                "sensor heights must be positive".into(),
            ));
        }
        if self.lidar_max_range <= 0.0 {
            return Err(Error::InvalidParameter(
                "lidar_max_range must be positive".into(),
            ));
        }
        if !(self.lidar_vfov_halfangle > 0.0 && self.lidar_vfov_halfangle < PI / 2.0) {
            return Err(Error::InvalidParameter(
                "lidar_vfov_halfangle must lie in (0, 90) degrees".into(),
            ));
        }
        Ok(())
    }

    /// World position of the LiDAR center.
    pub fn lidar_center(&self) -> [f64; 3] {
        [0.0, 0.0, self.lidar_height]
    }

    /// World position of the camera center.
    pub fn camera_center(&self) -> [f64; 3] {
        [self.frontal_offset, -self.lateral_offset, self.cam_height]
    }
}

/// One polar LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    /// Slant range `d_L` (m).
    pub range: f64,
    /// Latitude `β` (rad), positive below the LiDAR horizontal plane.
    pub latitude: f64,
    /// Longitude `γ_L` (rad).
    pub longitude: f64,
}

impl LidarPoint {
    pub fn new(range: f64, latitude: f64, longitude: f64) -> Self {
        Self {
            range,
            latitude,
            longitude,
        }
    }

    /// Forward ground-plane distance `D = d_L·cos β·cos γ_L`.
    pub fn ground_distance(&self) -> f64 {
        self.range * self.latitude.cos() * self.longitude.cos()
    }

    /// Lateral ground-plane offset `d_L·cos β·sin γ_L`.
    pub fn lateral_distance(&self) -> f64 {
        self.range * self.latitude.cos() * self.longitude.sin()
    }

    /// Height of the reflecting surface above the floor.
    pub fn height(&self, rig: &RigExtrinsics) -> f64 {
        rig.lidar_height - self.range * self.latitude.sin()
    }

    /// World coordinates of the return.
    pub fn world(&self, rig: &RigExtrinsics) -> [f64; 3] {
        [
            self.ground_distance(),
            self.lateral_distance(),
            self.height(rig),
        ]
    }
}

pub type PointCloud = Vec<LidarPoint>;

/// Viewing direction of the camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraDirection {
    /// Latitude `α` (rad), positive below the camera horizontal plane.
    pub latitude: f64,
    /// Longitude `γ_C` (rad).
    pub longitude: f64,
}

impl CameraDirection {
    /// Unit ray in world axes.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (sa, ca) = self.latitude.sin_cos();
        let (sg, cg) = self.longitude.sin_cos();
        [ca * cg, ca * sg, -sa]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
}

impl PixelCoord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

fn longitude_terms(p: &LidarPoint, rig: &RigExtrinsics) -> (f64, f64) {
    let horizontal = p.range * p.latitude.cos();
    let num = horizontal * p.longitude.sin() + rig.lateral_offset;
    let den = horizontal * p.longitude.cos() - rig.frontal_offset;
    (num, den)
}

/// Camera longitude `γ_C` of a LiDAR return.
pub fn camera_longitude(p: &LidarPoint, rig: &RigExtrinsics) -> Result<f64> {
    let (num, den) = longitude_terms(p, rig);
    if num.abs() < DEGENERATE_EPS && den.abs() < DEGENERATE_EPS {
        return Err(Error::DegenerateGeometry(
            "return lies on the camera's vertical axis".into(),
        ));
    }
    Ok(wrap_angle(num.atan2(den)))
}

/// Camera latitude `α` of a LiDAR return, given its camera longitude.
///
/// Evaluates `tan α = ((H_C − H_L) + d_L·sin β)·cos γ_C / (d_L·cos β·cos γ_L − Δx)`.
/// The ratio `cos γ_C / (d_L·cos β·cos γ_L − Δx)` is the reciprocal of the
/// horizontal camera-to-object distance; when `γ_C` is close to ±π/2 both
/// factors vanish together, so that distance is taken from the longitude
/// terms directly.
pub fn camera_latitude(p: &LidarPoint, rig: &RigExtrinsics, cam_longitude: f64) -> Result<f64> {
    let (num, den) = longitude_terms(p, rig);
    if num.abs() < DEGENERATE_EPS && den.abs() < DEGENERATE_EPS {
        return Err(Error::DegenerateGeometry(
            "return lies on the camera's vertical axis".into(),
        ));
    }
    let rise = (rig.cam_height - rig.lidar_height) + p.range * p.latitude.sin();
    let cos_g = cam_longitude.cos();
    if cos_g.abs() > 1e-3 && den != 0.0 {
        Ok((rise * cos_g / den).atan())
    } else {
        Ok((rise / num.hypot(den)).atan())
    }
}

/// Camera direction of a LiDAR return (longitude first, then latitude).
pub fn align_point(p: &LidarPoint, rig: &RigExtrinsics) -> Result<CameraDirection> {
    let longitude = camera_longitude(p, rig)?;
    let latitude = camera_latitude(p, rig, longitude)?;
    Ok(CameraDirection {
        latitude,
        longitude,
    })
}

/// Rounds half up (towards +∞).
#[inline]
fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Equirectangular pixel of a camera direction, clamped to the image.
///
/// `col = round((γ_C/2π + 0.5)·(W−1))`, `row = round((0.5 − α/π)·(H−1))`.
/// Row 0 therefore looks straight down (α = π/2).
pub fn direction_to_pixel(dir: &CameraDirection, width: usize, height: usize) -> PixelCoord {
    let w = width.max(1);
    let h = height.max(1);
    let col = round_half_up((dir.longitude / (2.0 * PI) + 0.5) * (w - 1) as f64);
    let row = round_half_up((0.5 - dir.latitude / PI) * (h - 1) as f64);
    let clamp = |v: f64, n: usize| -> usize {
        if v.is_nan() || v < 0.0 {
            0
        } else {
            (v as usize).min(n - 1)
        }
    };
    PixelCoord {
        row: clamp(row, h),
        col: clamp(col, w),
    }
}

/// Direction through the center of an equirectangular pixel (inverse of
/// [`direction_to_pixel`] on pixel centers).
pub fn pixel_to_direction(px: PixelCoord, width: usize, height: usize) -> CameraDirection {
    let col_frac = if width > 1 {
        px.col as f64 / (width - 1) as f64
    } else {
        0.5
    };
    let row_frac = if height > 1 {
        px.row as f64 / (height - 1) as f64
    } else {
        0.5
    };
    CameraDirection {
        latitude: (0.5 - row_frac) * PI,
        longitude: (col_frac - 0.5) * 2.0 * PI,
    }
}

/// Projects a cloud onto the image grid, storing the forward ground-plane
/// distance `D` of each return. Returns with `D ≤ 0` (behind the LiDAR's
/// lateral plane) are skipped. Collisions keep the nearest `D`.
pub fn project_cloud(
    cloud: &[LidarPoint],
    rig: &RigExtrinsics,
    width: usize,
    height: usize,
) -> Result<crate::raster::SparseDepthMap> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut map = crate::raster::Grid::filled(width, height, None::<f64>);
    for p in cloud {
        let d = p.ground_distance();
        if !(d > 0.0 && d.is_finite()) {
            continue;
        }
        let dir = match align_point(p, rig) {
            Ok(dir) => dir,
            Err(_) => continue,
        };
        let px = direction_to_pixel(&dir, width, height);
        let slot = map.get_mut(px.row, px.col);
        match slot {
            Some(existing) if *existing <= d => {}
            _ => *slot = Some(d),
        }
    }
    Ok(map)
}

/// Neighbourhood visibility test applied to a projected depth map.
///
/// The two sensors sit at different places, so a return the LiDAR sees just
/// past an obstacle's edge can land on camera pixels that show the obstacle
/// itself. Such a return is dropped when any filled pixel within `radius`
/// (Chebyshev distance) holds a depth smaller by more than `relative_gap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionFilter {
    /// Neighbourhood half-width in pixels; 0 disables the filter.
    pub radius: usize,
    pub relative_gap: f64,
}

impl Default for OcclusionFilter {
    fn default() -> Self {
        Self {
            radius: 2,
            relative_gap: 0.2,
        }
    }
}

impl OcclusionFilter {
    pub fn disabled() -> Self {
        Self {
            radius: 0,
            relative_gap: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_gap > 0.0 && self.relative_gap < 1.0) {
            return Err(Error::InvalidParameter(
                "occlusion gap must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Drops projected returns hidden from the camera by a nearer return nearby.
pub fn remove_occluded(
    sparse: &crate::raster::SparseDepthMap,
    filter: &OcclusionFilter,
) -> crate::raster::SparseDepthMap {
    let (w, h) = sparse.dims();
    let rad = filter.radius;
    crate::raster::Grid::from_fn(w, h, |row, col| {
        let d = (*sparse.get(row, col))?;
        let limit = d * (1.0 - filter.relative_gap);
        for r in row.saturating_sub(rad)..(row + rad + 1).min(h) {
            for c in col.saturating_sub(rad)..(col + rad + 1).min(w) {
                if sparse.get(r, c).is_some_and(|e| e < limit) {
                    return None;
                }
            }
        }
        Some(d)
    })
}

/// LiDAR reading and camera direction of a world point, computed
/// independently from each sensor's center.
pub fn inverse_project(world: [f64; 3], rig: &RigExtrinsics) -> Result<(LidarPoint, CameraDirection)> {
    let [x, y, z] = world;
    let lidar = rig.lidar_center();
    let cam = rig.camera_center();

    let (lx, ly, lz) = (x - lidar[0], y - lidar[1], z - lidar[2]);
    let l_horiz = lx.hypot(ly);
    let range = l_horiz.hypot(lz);
    if range < DEGENERATE_EPS {
        return Err(Error::DegenerateGeometry(
            "point coincides with the LiDAR center".into(),
        ));
    }
    let (cx, cy, cz) = (x - cam[0], y - cam[1], z - cam[2]);
    let c_horiz = cx.hypot(cy);
    if c_horiz.hypot(cz) < DEGENERATE_EPS {
        return Err(Error::DegenerateGeometry(
            "point coincides with the camera center".into(),
        ));
    }

    let point = LidarPoint {
        range,
        latitude: (-lz).atan2(l_horiz),
        longitude: wrap_angle(ly.atan2(lx)),
    };
    let dir = CameraDirection {
        latitude: (-cz).atan2(c_horiz),
        longitude: wrap_angle(cy.atan2(cx)),
    };
    Ok((point, dir))
}

/// Intersection of a camera ray with the floor, as world `(x, y)`.
/// `None` for rays at or above the camera horizon.
pub fn camera_ray_floor_hit(dir: &CameraDirection, rig: &RigExtrinsics) -> Option<(f64, f64)> {
    if dir.latitude <= 0.0 {
        return None;
    }
    let reach = rig.cam_height / dir.latitude.tan();
    let cam = rig.camera_center();
    Some((
        cam[0] + reach * dir.longitude.cos(),
        cam[1] + reach * dir.longitude.sin(),
    ))
}
