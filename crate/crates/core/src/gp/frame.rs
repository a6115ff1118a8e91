//! Patch tiling and inverse-variance blending of per-patch posteriors.

use rayon::prelude::*;

use super::kernel::GpParams;
use super::posterior::gp_posterior;
use crate::error::{Error, Result};
use crate::geometry::PixelCoord;
use crate::raster::{DenseDepthMap, GreyImage, Grid, SparseDepthMap, UncertaintyMap};

/// Smallest variance used as a blending weight denominator.
const VARIANCE_FLOOR: f64 = 1e-12;

/// Rectangle `[row0, row0 + height) × [col0, col0 + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

/// Output of one patch regression.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchEstimate {
    pub window: Window,
    /// Row-major means over the window.
    pub mean: Vec<f64>,
    /// Row-major variances over the window.
    pub variance: Vec<f64>,
    /// False when the patch had fewer than `min_train_points` samples; every
    /// pixel then carries the prior variance and no mean.
    pub supported: bool,
}

/// Window start offsets covering `len` with the given size and stride; the
/// last window is flush with the end.
pub fn window_starts(len: usize, size: usize, stride: usize) -> Vec<usize> {
    if len <= size {
        return vec![0];
    }
    let mut starts: Vec<usize> = (0..)
        .map(|k| k * stride)
        .take_while(|&s| s + size < len)
        .collect();
    starts.push(len - size);
    starts.dedup();
    starts
}

/// Tiles a `width × height` frame into overlapping patches in row-major order.
pub fn patch_windows(width: usize, height: usize, params: &GpParams) -> Vec<Window> {
    let n = params.patch_size;
    let stride = params.patch_size - params.patch_overlap;
    let rows = window_starts(height, n, stride);
    let cols = window_starts(width, n, stride);
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for &row0 in &rows {
        for &col0 in &cols {
            out.push(Window {
                row0,
                col0,
                height: n.min(height),
                width: n.min(width),
            });
        }
    }
    out
}

fn fuse_window(
    sparse: &SparseDepthMap,
    grey: &GreyImage,
    window: Window,
    params: &GpParams,
) -> Result<PatchEstimate> {
    let mut train = Vec::new();
    let mut values = Vec::new();
    let mut all = Vec::with_capacity(window.width * window.height);
    for r in window.row0..window.row0 + window.height {
        for c in window.col0..window.col0 + window.width {
            let px = PixelCoord::new(r, c);
            if let Some(d) = *sparse.get(r, c) {
                train.push(px);
                values.push(d);
            }
            all.push(px);
        }
    }

    let cells = all.len();
    if train.len() < params.min_train_points {
        return Ok(PatchEstimate {
            window,
            mean: vec![f64::NAN; cells],
            variance: vec![params.prior_variance(); cells],
            supported: false,
        });
    }

    let post = gp_posterior(&train, &values, &all, grey, params)?;
    let mut mean = post.means;
    // Measured pixels keep their value; their variance stays the posterior one.
    for (i, px) in all.iter().enumerate() {
        if let Some(d) = *sparse.get(px.row, px.col) {
            mean[i] = d;
        }
    }
    Ok(PatchEstimate {
        window,
        mean,
        variance: post.variances,
        supported: true,
    })
}

/// Fills the empty pixels of one patch by GP regression. The inputs are the
/// patch-sized windows of the sparse depth map and the grey image.
pub fn fuse_patch(
    sparse: &SparseDepthMap,
    grey: &GreyImage,
    params: &GpParams,
) -> Result<PatchEstimate> {
    sparse.ensure_same_dims(grey)?;
    params.validate()?;
    let window = Window {
        row0: 0,
        col0: 0,
        height: sparse.height(),
        width: sparse.width(),
    };
    fuse_window(sparse, grey, window, params)
}

/// Completes a whole frame. Equivalent to [`fuse_frame_parallel`] with one
/// thread.
pub fn fuse_frame(
    sparse: &SparseDepthMap,
    grey: &GreyImage,
    params: &GpParams,
) -> Result<(DenseDepthMap, UncertaintyMap)> {
    fuse_frame_parallel(sparse, grey, params, 1)
}

/// Completes a whole frame, evaluating patches on up to `threads` worker
/// threads. Patch results are blended in patch order, so the output is
/// bit-identical for every thread count.
pub fn fuse_frame_parallel(
    sparse: &SparseDepthMap,
    grey: &GreyImage,
    params: &GpParams,
    threads: usize,
) -> Result<(DenseDepthMap, UncertaintyMap)> {
    grey.ensure_same_dims(sparse)?;
    params.validate()?;
    let (width, height) = sparse.dims();
    let windows = patch_windows(width, height, params);

    let run = |(idx, w): (usize, &Window)| {
        fuse_window(sparse, grey, *w, params).map_err(|e| match e {
            Error::SingularKernel { .. } => Error::SingularKernel { patch: idx },
            other => other,
        })
    };
    let estimates: Vec<PatchEstimate> = if threads <= 1 {
        windows.iter().enumerate().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        pool.install(|| {
            windows
                .par_iter()
                .enumerate()
                .map(run)
                .collect::<Result<Vec<_>>>()
        })?
    };

    Ok(blend(width, height, &estimates, params))
}

/// Inverse-variance blend of overlapping patch estimates.
pub fn blend(
    width: usize,
    height: usize,
    estimates: &[PatchEstimate],
    params: &GpParams,
) -> (DenseDepthMap, UncertaintyMap) {
    let mut sum_w = Grid::filled(width, height, 0.0f64);
    let mut sum_wm = Grid::filled(width, height, 0.0f64);
    for est in estimates.iter().filter(|e| e.supported) {
        let w = est.window;
        for r in 0..w.height {
            for c in 0..w.width {
                let i = r * w.width + c;
                let weight = 1.0 / est.variance[i].max(VARIANCE_FLOOR);
                *sum_w.get_mut(w.row0 + r, w.col0 + c) += weight;
                *sum_wm.get_mut(w.row0 + r, w.col0 + c) += weight * est.mean[i];
            }
        }
    }

    let mut dense = DenseDepthMap::unknown(width, height);
    let mut var = Grid::filled(width, height, params.prior_variance());
    for r in 0..height {
        for c in 0..width {
            let w = *sum_w.get(r, c);
            if w > 0.0 {
                dense.set(r, c, Some(*sum_wm.get(r, c) / w));
                var.set(r, c, 1.0 / w);
            }
        }
    }
    (dense, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_starts_cover_everything() {
        assert_eq!(window_starts(10, 32, 24), vec![0]);
        assert_eq!(window_starts(32, 32, 24), vec![0]);
        assert_eq!(window_starts(50, 32, 24), vec![0, 18]);
        assert_eq!(window_starts(360, 32, 24).last(), Some(&328));
        for len in 1..200 {
            let starts = window_starts(len, 16, 12);
            let mut covered = vec![false; len];
            for s in &starts {
                for c in covered.iter_mut().skip(*s).take(16) {
                    *c = true;
                }
            }
            assert!(covered.iter().all(|&c| c), "len {len}");
        }
    }

    #[test]
    fn fully_filled_patch_unchanged() {
        let p = GpParams::default();
        let sparse = Grid::from_fn(8, 8, |r, c| Some(1.0 + 0.1 * r as f64 + 0.05 * c as f64));
        let grey = Grid::from_fn(8, 8, |r, _| r as f64 / 8.0);
        let est = fuse_patch(&sparse, &grey, &p).unwrap();
        assert!(est.supported);
        for (i, v) in sparse.as_slice().iter().enumerate() {
            assert_eq!(est.mean[i], v.unwrap());
            assert!(est.variance[i] <= p.noise_variance + 1e-10 * p.signal_variance);
        }
    }

    #[test]
    fn empty_patch_is_unknown() {
        let p = GpParams::default();
        let sparse = Grid::filled(8, 8, None);
        let grey = Grid::filled(8, 8, 0.4);
        let est = fuse_patch(&sparse, &grey, &p).unwrap();
        assert!(!est.supported);
        assert!(est.variance.iter().all(|&v| v == p.prior_variance()));
    }

    #[test]
    fn too_few_points_is_unknown() {
        let p = GpParams::default();
        let mut sparse = Grid::filled(8, 8, None);
        sparse.set(2, 2, Some(3.0));
        sparse.set(5, 5, Some(3.0));
        let est = fuse_patch(&sparse, &Grid::filled(8, 8, 0.4), &p).unwrap();
        assert!(!est.supported);
    }

    #[test]
    fn constant_depth_frame() {
        let p = GpParams::default();
        let sparse = Grid::from_fn(70, 50, |r, c| {
            if r % 4 == 0 && c % 3 == 0 {
                Some(2.5)
            } else {
                None
            }
        });
        let grey = Grid::filled(70, 50, 0.3);
        let (dense, var) = fuse_frame(&sparse, &grey, &p).unwrap();
        for r in 0..50 {
            for c in 0..70 {
                let v = dense.value(r, c).unwrap();
                assert!((v - 2.5).abs() < 1e-12);
                assert!(*var.get(r, c) >= 0.0);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = GpParams::default();
        let sparse = Grid::filled(10, 10, None);
        let grey = Grid::filled(10, 11, 0.0);
        assert!(matches!(
            fuse_frame(&sparse, &grey, &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unsupported_pixels_keep_prior_variance() {
        let p = GpParams::default();
        let mut sparse = Grid::filled(100, 40, None);
        for c in 0..20 {
            sparse.set(10, c, Some(4.0));
        }
        let (dense, var) = fuse_frame(&sparse, &Grid::filled(100, 40, 0.5), &p).unwrap();
        assert_eq!(dense.value(20, 90), None);
        assert_eq!(*var.get(20, 90), p.prior_variance());
        assert!(dense.value(10, 5).is_some());
    }
}
