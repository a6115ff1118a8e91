use crate::error::Result;
use crate::geometry::{pixel_to_direction, PixelCoord, RigExtrinsics};
use crate::raster::{DenseDepthMap, Grid, UncertaintyMap};

/// Per-pixel or per-cell free-space label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Label {
    Free,
    Occupied,
    #[default]
    Unknown,
}

impl Label {
    pub fn is_free(self) -> bool {
        self == Label::Free
    }

    pub fn is_known(self) -> bool {
        self != Label::Unknown
    }
}

pub type FreeSpaceMask = Grid<Label>;

/// Default height tolerance around the floor (m).
pub const DEFAULT_HEIGHT_TOL: f64 = 0.05;
/// Default variance gate on fused depth (m²).
pub const DEFAULT_UNC_TOL: f64 = 0.25;

/// Smallest |cos γ_C| for which a forward distance pins down a camera range.
const MIN_LONGITUDE_COS: f64 = 1e-3;
/// Smallest cos α; steeper rays see every height at the same forward distance.
const MIN_LATITUDE_COS: f64 = 1e-3;

/// Height above the floor of the point at forward ground distance `depth`
/// seen through `px`. `None` when the pixel looks sideways or straight up or
/// down (the forward distance carries no range information there), or when
/// the depth is inconsistent with the viewing direction.
pub fn pixel_height(
    px: PixelCoord,
    depth: f64,
    width: usize,
    height: usize,
    rig: &RigExtrinsics,
) -> Option<f64> {
    let dir = pixel_to_direction(px, width, height);
    let cos_g = dir.longitude.cos();
    if cos_g.abs() < MIN_LONGITUDE_COS || dir.latitude.cos() < MIN_LATITUDE_COS {
        return None;
    }
    let horizontal = (depth - rig.frontal_offset) / cos_g;
    if !(horizontal > 0.0) {
        return None;
    }
    Some(rig.cam_height - horizontal * dir.latitude.tan())
}

/// Labels pixels from fused depth: free at floor level, occupied above it,
/// unknown when the depth is missing, too uncertain, or below the floor.
pub fn ground_mask_from_depth(
    dense: &DenseDepthMap,
    unc: &UncertaintyMap,
    rig: &RigExtrinsics,
    height_tol: f64,
    unc_tol: f64,
) -> Result<FreeSpaceMask> {
    dense.depth.ensure_same_dims(unc)?;
    let (w, h) = dense.dims();
    Ok(Grid::from_fn(w, h, |row, col| {
        let Some(depth) = dense.value(row, col) else {
            return Label::Unknown;
        };
        if !(*unc.get(row, col) <= unc_tol) {
            return Label::Unknown;
        }
        match pixel_height(PixelCoord::new(row, col), depth, w, h, rig) {
            Some(z) if z.abs() <= height_tol => Label::Free,
            Some(z) if z > height_tol => Label::Occupied,
            _ => Label::Unknown,
        }
    }))
}
