use crate::error::{Error, Result};
use crate::geometry::PixelCoord;
use crate::raster::GreyImage;

/// Hyper-parameters of the patch-wise Gaussian-process depth completion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpParams {
    /// Spatial kernel width `K_p` (px²).
    pub spatial_width: f64,
    /// Intensity kernel width `K_l` (normalized intensity²).
    pub intensity_width: f64,
    /// Observation noise variance σ_n² (m²).
    pub noise_variance: f64,
    /// Prior signal variance (m²); the covariance is `signal_variance·κ`.
    pub signal_variance: f64,
    /// Patch side `n` (px).
    pub patch_size: usize,
    /// Overlap between neighbouring patches (px).
    pub patch_overlap: usize,
    /// Patches with fewer training pixels are left unknown.
    pub min_train_points: usize,
}

impl Default for GpParams {
    fn default() -> Self {
        Self {
            spatial_width: 16.0,
            intensity_width: 0.01,
            noise_variance: 1e-4,
            signal_variance: 1.0,
            patch_size: 32,
            patch_overlap: 8,
            min_train_points: 4,
        }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.spatial_width > 0.0 && self.spatial_width.is_finite()) {
            return Err(Error::InvalidParameter("K_p must be positive".into()));
        }
        if !(self.intensity_width > 0.0 && self.intensity_width.is_finite()) {
            return Err(Error::InvalidParameter("K_l must be positive".into()));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidParameter(
                "noise variance must be non-negative".into(),
            ));
        }
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::InvalidParameter(
                "signal variance must be positive".into(),
            ));
        }
        if self.patch_size == 0 || self.patch_overlap >= self.patch_size {
            return Err(Error::InvalidParameter(
                "patch overlap must be smaller than the patch size".into(),
            ));
        }
        if self.min_train_points == 0 {
            return Err(Error::InvalidParameter(
                "min_train_points must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Prior variance of a single pixel.
    pub fn prior_variance(&self) -> f64 {
        self.signal_variance
    }
}

/// Spatial closeness `exp(−‖x − x'‖² / 2K_p)` on (row, col) coordinates.
#[inline]
pub fn kernel_closeness(a: PixelCoord, b: PixelCoord, spatial_width: f64) -> f64 {
    let dr = a.row as f64 - b.row as f64;
    let dc = a.col as f64 - b.col as f64;
    (-(dr * dr + dc * dc) / (2.0 * spatial_width)).exp()
}

/// Grey-level similarity `exp(−(I − I')² / 2K_l)`.
#[inline]
pub fn kernel_similarity(a: f64, b: f64, intensity_width: f64) -> f64 {
    let d = a - b;
    (-(d * d) / (2.0 * intensity_width)).exp()
}

/// Product kernel `κ(x, x') = c(x, x')·s(x, x')`.
#[inline]
pub fn kernel(a: PixelCoord, b: PixelCoord, image: &GreyImage, params: &GpParams) -> f64 {
    kernel_closeness(a, b, params.spatial_width)
        * kernel_similarity(
            *image.get(a.row, a.col),
            *image.get(b.row, b.col),
            params.intensity_width,
        )
}
