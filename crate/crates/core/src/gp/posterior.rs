use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::{kernel, GpParams};
use crate::error::{Error, Result};
use crate::geometry::PixelCoord;
use crate::raster::GreyImage;

/// First jitter level, relative to the mean kernel diagonal.
pub const JITTER_START: f64 = 1e-10;
/// Largest relative jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-4;

/// Posterior predictive mean and variance at a set of query pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Constant prior mean (average of the training depths).
    pub prior_mean: f64,
    /// Absolute jitter that was added to the diagonal on top of σ_n².
    pub jitter: f64,
}

/// Factorizes `K + (σ_n² + jitter)·I`, escalating the jitter tenfold until
/// the Cholesky factorization succeeds.
pub(crate) fn factorize(k: &DMatrix<f64>, noise: f64) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    let mean_diag = if n == 0 {
        1.0
    } else {
        k.diagonal().iter().sum::<f64>() / n as f64
    };
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        let jitter = rel * mean_diag;
        let mut ky = k.clone();
        for i in 0..n {
            ky[(i, i)] += noise + jitter;
        }
        if let Some(chol) = Cholesky::new(ky) {
            return Some((chol, jitter));
        }
        rel *= 10.0;
    }
    None
}

/// Gaussian-process posterior of depth at `query` pixels given training
/// pixels `train` with depths `values`.
///
/// Uses a constant prior mean equal to the average training depth and the
/// covariance `signal_variance·κ`, regularized by `σ_n²·I`. Training pixels
/// are processed in (row, col) order so the result does not depend on the
/// order they are supplied in.
pub fn gp_posterior(
    train: &[PixelCoord],
    values: &[f64],
    query: &[PixelCoord],
    image: &GreyImage,
    params: &GpParams,
) -> Result<Posterior> {
    if train.is_empty() || train.len() != values.len() {
        return Err(Error::InvalidParameter(format!(
            "need matching non-empty training pixels and values ({} vs {})",
            train.len(),
            values.len()
        )));
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by(|&a, &b| {
        train[a]
            .cmp(&train[b])
            .then(values[a].total_cmp(&values[b]))
    });
    let xs: Vec<PixelCoord> = order.iter().map(|&i| train[i]).collect();
    let fs: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    let n = xs.len();
    let prior_mean = fs.iter().sum::<f64>() / n as f64;
    let s2 = params.signal_variance;

    let k = DMatrix::from_fn(n, n, |i, j| s2 * kernel(xs[i], xs[j], image, params));
    let (chol, jitter) =
        factorize(&k, params.noise_variance).ok_or(Error::SingularKernel { patch: 0 })?;

    let residual = DVector::from_iterator(n, fs.iter().map(|f| f - prior_mean));
    let weights = chol.solve(&residual);

    let m = query.len();
    let mut kstar = DMatrix::from_fn(n, m, |i, j| s2 * kernel(xs[i], query[j], image, params));
    let means: Vec<f64> = (0..m)
        .map(|j| prior_mean + kstar.column(j).dot(&weights))
        .collect();

    chol.l_dirty().solve_lower_triangular_mut(&mut kstar);
    let variances: Vec<f64> = (0..m)
        .map(|j| {
            let prior = s2 * kernel(query[j], query[j], image, params);
            (prior - kstar.column(j).norm_squared()).clamp(0.0, prior)
        })
        .collect();

    Ok(Posterior {
        means,
        variances,
        prior_mean,
        jitter,
    })
}
