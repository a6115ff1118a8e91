//! Histogram-of-oriented-gradients descriptor for 16×16 grey patches.
//!
//! Four 8×8 cells, nine unsigned orientation bins each, one L2-normalized
//! block covering the whole patch.

use std::f64::consts::PI;

use crate::raster::GreyImage;

pub const PATCH: usize = 16;
pub const CELL: usize = 8;
pub const BINS: usize = 9;
pub const FEATURE_LEN: usize = 4 * BINS;

const NORM_EPS: f64 = 1e-6;

/// A 16×16 grey patch in row-major order.
pub type Patch = [f64; PATCH * PATCH];

/// 36-element block-normalized descriptor. Entry `cell * 9 + bin`, cells in
/// row-major order; bin `k` is centered on gradient orientation `k·20°`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HogFeature(pub [f64; FEATURE_LEN]);

impl HogFeature {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn squared_distance(&self, other: &HogFeature) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn cell(&self, cell: usize) -> &[f64] {
        &self.0[cell * BINS..(cell + 1) * BINS]
    }
}

/// Copies the 16×16 tile at `(row0, col0)`, clamping coordinates to the image.
pub fn extract_patch(image: &GreyImage, row0: usize, col0: usize) -> Patch {
    let mut patch = [0.0; PATCH * PATCH];
    let (w, h) = image.dims();
    for r in 0..PATCH {
        for c in 0..PATCH {
            let rr = (row0 + r).min(h - 1);
            let cc = (col0 + c).min(w - 1);
            patch[r * PATCH + c] = *image.get(rr, cc);
        }
    }
    patch
}

pub fn hog_features(patch: &Patch) -> HogFeature {
    let at = |r: isize, c: isize| {
        let r = r.clamp(0, PATCH as isize - 1) as usize;
        let c = c.clamp(0, PATCH as isize - 1) as usize;
        patch[r * PATCH + c]
    };
    let bin_width = PI / BINS as f64;
    let mut hist = [0.0; FEATURE_LEN];
    for r in 0..PATCH as isize {
        for c in 0..PATCH as isize {
            let gx = at(r, c + 1) - at(r, c - 1);
            let gy = at(r + 1, c) - at(r - 1, c);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let theta = gy.atan2(gx).rem_euclid(PI);
            let pos = theta / bin_width;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = (lo as usize) % BINS;
            let hi = (lo + 1) % BINS;
            let cell = (r as usize / CELL) * 2 + (c as usize / CELL);
            hist[cell * BINS + lo] += (1.0 - frac) * mag;
            hist[cell * BINS + hi] += frac * mag;
        }
    }
    let norm = (hist.iter().map(|v| v * v).sum::<f64>() + NORM_EPS * NORM_EPS).sqrt();
    if hist.iter().all(|&v| v == 0.0) {
        return HogFeature(hist);
    }
    for v in hist.iter_mut() {
        *v /= norm;
    }
    HogFeature(hist)
}
