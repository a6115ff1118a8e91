//! Occupancy grids on the floor plane and their fusion.
//!
//! The grid's row index `ix` counts cells forward from the LiDAR ground point
//! (`x ∈ [ix·s, (ix+1)·s)`), its column index `iy` counts cells across
//! (`y ∈ [−E_y/2 + iy·s, …)`). The LiDAR ground point therefore sits in the
//! rear-center cell `(0, n_y/2)`.

use super::mask::{FreeSpaceMask, Label};
use crate::error::{Error, Result};
use crate::geometry::{camera_ray_floor_hit, pixel_to_direction, LidarPoint, PixelCoord, RigExtrinsics};
use crate::raster::Grid;

/// Confidence given to a decision taken from the non-preferred source.
pub const FALLBACK_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub cell_size: f64,
    pub extent_x: f64,
    pub extent_y: f64,
}

impl Default for GridGeometry {
    fn default() -> Self {
        Self {
            cell_size: 0.1,
            extent_x: 20.0,
            extent_y: 20.0,
        }
    }
}

impl GridGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.extent_x >= self.cell_size && self.extent_y >= self.cell_size) {
            return Err(Error::InvalidParameter(
                "grid needs a positive cell size no larger than its extents".into(),
            ));
        }
        Ok(())
    }

    /// Number of cells along `x` (rows).
    pub fn rows(&self) -> usize {
        (self.extent_x / self.cell_size).round() as usize
    }

    /// Number of cells along `y` (columns).
    pub fn cols(&self) -> usize {
        (self.extent_y / self.cell_size).round() as usize
    }

    /// Cell holding the LiDAR ground point.
    pub fn origin_cell(&self) -> (usize, usize) {
        (0, self.cols() / 2)
    }

    fn y_min(&self) -> f64 {
        -(self.cols() as f64) * self.cell_size / 2.0
    }

    /// Continuous cell coordinates of a floor point.
    fn to_cell_space(&self, x: f64, y: f64) -> (f64, f64) {
        (x / self.cell_size, (y - self.y_min()) / self.cell_size)
    }

    /// Cell containing the floor point, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (u, v) = self.to_cell_space(x, y);
        if !(u >= 0.0 && v >= 0.0) {
            return None;
        }
        let (i, j) = (u.floor() as usize, v.floor() as usize);
        (i < self.rows() && j < self.cols()).then_some((i, j))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            (ix as f64 + 0.5) * self.cell_size,
            self.y_min() + (iy as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cells crossed by the segment from `from` to `to` (floor coordinates),
    /// in order, clipped to the grid. Both neighbours are visited when the
    /// segment passes exactly through a cell corner.
    pub fn supercover(&self, from: (f64, f64), to: (f64, f64)) -> Vec<(usize, usize)> {
        let (u0, v0) = self.to_cell_space(from.0, from.1);
        let (u1, v1) = self.to_cell_space(to.0, to.1);
        let (rows, cols) = (self.rows() as i64, self.cols() as i64);
        let inside = |i: i64, j: i64| i >= 0 && j >= 0 && i < rows && j < cols;
        let mut out = Vec::new();
        let push = |i: i64, j: i64, out: &mut Vec<(usize, usize)>| {
            if inside(i, j) {
                out.push((i as usize, j as usize));
            }
        };

        let (mut i, mut j) = (u0.floor() as i64, v0.floor() as i64);
        let (i_end, j_end) = (u1.floor() as i64, v1.floor() as i64);
        let (du, dv) = (u1 - u0, v1 - v0);
        let step_i: i64 = if du > 0.0 { 1 } else { -1 };
        let step_j: i64 = if dv > 0.0 { 1 } else { -1 };
        let t_delta_u = if du != 0.0 { (1.0 / du).abs() } else { f64::INFINITY };
        let t_delta_v = if dv != 0.0 { (1.0 / dv).abs() } else { f64::INFINITY };
        let mut t_max_u = if du > 0.0 {
            ((i + 1) as f64 - u0) / du
        } else if du < 0.0 {
            (i as f64 - u0) / du
        } else {
            f64::INFINITY
        };
        let mut t_max_v = if dv > 0.0 {
            ((j + 1) as f64 - v0) / dv
        } else if dv < 0.0 {
            (j as f64 - v0) / dv
        } else {
            f64::INFINITY
        };

        push(i, j, &mut out);
        let max_steps = (i_end - i).abs() + (j_end - j).abs() + 2;
        for _ in 0..max_steps {
            if i == i_end && j == j_end {
                break;
            }
            if t_max_u > 1.0 && t_max_v > 1.0 {
                break;
            }
            if t_max_u < t_max_v {
                i += step_i;
                t_max_u += t_delta_u;
            } else if t_max_v < t_max_u {
                j += step_j;
                t_max_v += t_delta_v;
            } else {
                // Exact corner crossing.
                push(i + step_i, j, &mut out);
                push(i, j + step_j, &mut out);
                i += step_i;
                j += step_j;
                t_max_u += t_delta_u;
                t_max_v += t_delta_v;
            }
            push(i, j, &mut out);
        }
        out.dedup();
        out
    }
}

/// Ground-plane occupancy grid with per-cell confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct OgMap {
    pub geometry: GridGeometry,
    /// Indexed `(ix, iy)` as (row, col).
    pub state: Grid<Label>,
    pub confidence: Grid<f64>,
}

impl OgMap {
    pub fn unknown(geometry: GridGeometry) -> Self {
        let (r, c) = (geometry.rows(), geometry.cols());
        Self {
            geometry,
            state: Grid::filled(c, r, Label::Unknown),
            confidence: Grid::filled(c, r, 0.0),
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> Label {
        *self.state.get(ix, iy)
    }

    pub fn set(&mut self, ix: usize, iy: usize, label: Label, confidence: f64) {
        self.state.set(ix, iy, label);
        self.confidence
            .set(ix, iy, if label == Label::Unknown { 0.0 } else { confidence });
    }

    /// State of the cell under a floor point (unknown outside the grid).
    pub fn at_point(&self, x: f64, y: f64) -> Label {
        self.geometry
            .cell_of(x, y)
            .map_or(Label::Unknown, |(i, j)| self.get(i, j))
    }

    pub fn count(&self, label: Label) -> usize {
        self.state.as_slice().iter().filter(|l| **l == label).count()
    }

    fn ensure_same_geometry(&self, other: &OgMap) -> Result<()> {
        if self.geometry != other.geometry || self.state.dims() != other.state.dims() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Radius around the LiDAR ground point that no beam reaches.
pub fn blind_radius(rig: &RigExtrinsics) -> f64 {
    rig.lidar_height / rig.lidar_vfov_halfangle.tan()
}

/// Cells whose center is closer to the LiDAR ground point than the lowest
/// beam's floor intersection.
pub fn blind_spot_mask(rig: &RigExtrinsics, geometry: &GridGeometry) -> Grid<bool> {
    let radius = blind_radius(rig);
    Grid::from_fn(geometry.cols(), geometry.rows(), |ix, iy| {
        let (x, y) = geometry.cell_center(ix, iy);
        x.hypot(y) < radius
    })
}

/// LiDAR-only occupancy: cells crossed by a beam before its return are free;
/// the return's own cell is occupied when it lies above `height_tol`, free
/// when it is on the floor. Occupied wins over free. Beams pass above the
/// floor inside the blind radius, so those cells stay unknown.
pub fn lidar_ogmap(
    cloud: &[LidarPoint],
    rig: &RigExtrinsics,
    geometry: &GridGeometry,
    height_tol: f64,
) -> Result<OgMap> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    geometry.validate()?;
    let mut map = OgMap::unknown(*geometry);
    let blind = blind_spot_mask(rig, geometry);
    let mut occupied = Vec::new();
    for p in cloud {
        let (x, y) = (p.ground_distance(), p.lateral_distance());
        let h = p.height(rig);
        let cells = geometry.supercover((0.0, 0.0), (x, y));
        let terminal = geometry.cell_of(x, y);
        for &(i, j) in &cells {
            if Some((i, j)) != terminal && !*blind.get(i, j) {
                map.set(i, j, Label::Free, 1.0);
            }
        }
        if let Some((i, j)) = terminal {
            if h > height_tol {
                occupied.push((i, j));
            } else if h >= -height_tol {
                map.set(i, j, Label::Free, 1.0);
            }
        }
    }
    for (i, j) in occupied {
        map.set(i, j, Label::Occupied, 1.0);
    }
    for (i, j, b) in blind.indexed() {
        if *b && map.get(i, j).is_known() {
            map.confidence.set(i, j, FALLBACK_CONFIDENCE);
        }
    }
    Ok(map)
}

/// Image-only occupancy: every labeled pixel below the horizon is dropped
/// onto the floor along its camera ray and votes for the cell it lands in.
/// Non-free pixels are treated as obstacles standing on the floor. A cell is
/// occupied when occupied votes are at least as many as free votes; its
/// confidence is the winning share of the votes.
pub fn image_ogmap(mask: &FreeSpaceMask, rig: &RigExtrinsics, geometry: &GridGeometry) -> Result<OgMap> {
    geometry.validate()?;
    let (w, h) = mask.dims();
    let mut votes = Grid::filled(geometry.cols(), geometry.rows(), (0u32, 0u32));
    for (row, col, label) in mask.indexed() {
        if *label == Label::Unknown {
            continue;
        }
        let dir = pixel_to_direction(PixelCoord::new(row, col), w, h);
        let Some((x, y)) = camera_ray_floor_hit(&dir, rig) else {
            continue;
        };
        let Some((i, j)) = geometry.cell_of(x, y) else {
            continue;
        };
        let v = votes.get_mut(i, j);
        match label {
            Label::Free => v.0 += 1,
            _ => v.1 += 1,
        }
    }
    let mut map = OgMap::unknown(*geometry);
    for (i, j, &(free, occupied)) in votes.indexed() {
        let total = (free + occupied) as f64;
        if occupied > 0 && occupied >= free {
            map.set(i, j, Label::Occupied, occupied as f64 / total);
        } else if free > 0 {
            map.set(i, j, Label::Free, free as f64 / total);
        }
    }
    Ok(map)
}

/// Overlay of two grids keeping the closest obstacle: occupied if either is
/// occupied, free if one is free and none occupied, and free cells behind the
/// first obstacle along the ray from the LiDAR ground point become unknown.
pub fn fuse_ogmaps_conservative(a: &OgMap, b: &OgMap) -> Result<OgMap> {
    a.ensure_same_geometry(b)?;
    let g = a.geometry;
    let mut out = OgMap::unknown(g);
    for ix in 0..g.rows() {
        for iy in 0..g.cols() {
            let (la, lb) = (a.get(ix, iy), b.get(ix, iy));
            let (ca, cb) = (*a.confidence.get(ix, iy), *b.confidence.get(ix, iy));
            let pick = |want: Label| {
                let mut c: f64 = 0.0;
                if la == want {
                    c = c.max(ca);
                }
                if lb == want {
                    c = c.max(cb);
                }
                c
            };
            if la == Label::Occupied || lb == Label::Occupied {
                out.set(ix, iy, Label::Occupied, pick(Label::Occupied));
            } else if la == Label::Free || lb == Label::Free {
                out.set(ix, iy, Label::Free, pick(Label::Free));
            }
        }
    }
    truncate_behind_obstacles(&mut out);
    Ok(out)
}

fn truncate_behind_obstacles(map: &mut OgMap) {
    let g = map.geometry;
    let mut shadowed = Vec::new();
    for ix in 0..g.rows() {
        for iy in 0..g.cols() {
            if map.get(ix, iy) != Label::Free {
                continue;
            }
            let path = g.supercover((0.0, 0.0), g.cell_center(ix, iy));
            let blocked = path
                .iter()
                .take_while(|&&c| c != (ix, iy))
                .any(|&(i, j)| map.get(i, j) == Label::Occupied);
            if blocked {
                shadowed.push((ix, iy));
            }
        }
    }
    for (i, j) in shadowed {
        map.set(i, j, Label::Unknown, 0.0);
    }
}

/// Blind-spot-aware fusion: inside the LiDAR blind spot the image grid
/// decides, elsewhere the LiDAR grid decides. When the preferred source is
/// unknown, the other source is used at [`FALLBACK_CONFIDENCE`].
pub fn fuse_ogmaps_uncertainty(lidar: &OgMap, image: &OgMap, blind: &Grid<bool>) -> Result<OgMap> {
    lidar.ensure_same_geometry(image)?;
    if blind.dims() != lidar.state.dims() {
        return Err(Error::GridMismatch);
    }
    let g = lidar.geometry;
    let mut out = OgMap::unknown(g);
    for ix in 0..g.rows() {
        for iy in 0..g.cols() {
            let (primary, secondary) = if *blind.get(ix, iy) {
                (image, lidar)
            } else {
                (lidar, image)
            };
            let lp = primary.get(ix, iy);
            let ls = secondary.get(ix, iy);
            if lp.is_known() {
                let c = *primary.confidence.get(ix, iy);
                out.set(ix, iy, lp, if *blind.get(ix, iy) { c } else { c.max(FALLBACK_CONFIDENCE) });
            } else if ls.is_known() {
                out.set(ix, iy, ls, FALLBACK_CONFIDENCE);
            }
        }
    }
    Ok(out)
}

/// Paints a grid back into the camera frame: each pixel whose ray meets the
/// floor takes the state of the cell it lands in.
pub fn ogmap_to_mask(map: &OgMap, rig: &RigExtrinsics, width: usize, height: usize) -> FreeSpaceMask {
    Grid::from_fn(width, height, |row, col| {
        let dir = pixel_to_direction(PixelCoord::new(row, col), width, height);
        match camera_ray_floor_hit(&dir, rig) {
            Some((x, y)) => map.at_point(x, y),
            None => Label::Unknown,
        }
    })
}

/// Pixels whose camera ray meets the floor inside the grid.
pub fn grid_support_mask(
    rig: &RigExtrinsics,
    geometry: &GridGeometry,
    width: usize,
    height: usize,
) -> Grid<bool> {
    Grid::from_fn(width, height, |row, col| {
        let dir = pixel_to_direction(PixelCoord::new(row, col), width, height);
        camera_ray_floor_hit(&dir, rig).is_some_and(|(x, y)| geometry.cell_of(x, y).is_some())
    })
}
