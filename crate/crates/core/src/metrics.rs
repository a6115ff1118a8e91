//! Mask agreement and depth error.
//!
//! Masks are binarized as free vs. not free, with free as the positive class.
//! Pixels whose ground truth is unknown are left out of every count.

use crate::error::{Error, Result};
use crate::freespace::{FreeSpaceMask, Label};
use crate::raster::{DenseDepthMap, Grid, SparseDepthMap};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_positive + self.true_negative + self.false_negative
    }

    pub fn mismatches(&self) -> usize {
        self.false_positive + self.false_negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub true_positive_rate: f64,
    pub mismatch_count: usize,
    /// Pixels that entered the counts.
    pub total: usize,
    /// Set when no pixel was predicted free; `precision` is then 1.0.
    pub precision_undefined: bool,
    /// Set when no ground-truth pixel is free; `true_positive_rate` is then 1.0.
    pub tpr_undefined: bool,
    /// Set when every ground-truth pixel is unknown; `accuracy` is then 1.0.
    pub accuracy_undefined: bool,
}

impl MaskMetrics {
    /// `accuracy=… precision=… tpr=… mismatches=…` plus any undefined flags.
    pub fn summary_line(&self) -> String {
        let mut s = format!(
            "accuracy={:.6} precision={:.6} tpr={:.6} mismatches={} total={}",
            self.accuracy, self.precision, self.true_positive_rate, self.mismatch_count, self.total
        );
        if self.accuracy_undefined {
            s.push_str(" accuracy_undefined=1");
        }
        if self.precision_undefined {
            s.push_str(" precision_undefined=1");
        }
        if self.tpr_undefined {
            s.push_str(" tpr_undefined=1");
        }
        s
    }
}

pub fn confusion(pred: &FreeSpaceMask, gt: &FreeSpaceMask) -> Result<Confusion> {
    pred.ensure_same_dims(gt)?;
    let mut c = Confusion::default();
    for (p, g) in pred.as_slice().iter().zip(gt.as_slice()) {
        if *g == Label::Unknown {
            continue;
        }
        match (p.is_free(), g.is_free()) {
            (true, true) => c.true_positive += 1,
            (true, false) => c.false_positive += 1,
            (false, false) => c.true_negative += 1,
            (false, true) => c.false_negative += 1,
        }
    }
    Ok(c)
}

/// Pixels where the binarized labels disagree.
pub fn mask_diff(pred: &FreeSpaceMask, gt: &FreeSpaceMask) -> Result<usize> {
    Ok(confusion(pred, gt)?.mismatches())
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (1.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn mask_metrics(pred: &FreeSpaceMask, gt: &FreeSpaceMask) -> Result<MaskMetrics> {
    Ok(metrics_from_confusion(&confusion(pred, gt)?))
}

pub fn metrics_from_confusion(c: &Confusion) -> MaskMetrics {
    let total = c.total();
    let (accuracy, accuracy_undefined) = ratio(total - c.mismatches(), total);
    let (precision, precision_undefined) = ratio(c.true_positive, c.true_positive + c.false_positive);
    let (true_positive_rate, tpr_undefined) = ratio(c.true_positive, c.true_positive + c.false_negative);
    MaskMetrics {
        accuracy,
        precision,
        true_positive_rate,
        mismatch_count: c.mismatches(),
        total,
        precision_undefined,
        tpr_undefined,
        accuracy_undefined,
    }
}

/// Root-mean-square depth error over pixels that are `valid` and known in
/// both maps.
/// Pixels bracketed by LiDAR samples in their own column: from the first to
/// the last filled pixel, inclusive. Columns with fewer than two samples are
/// left out. Scoring over this set measures interpolation, not extrapolation.
pub fn column_coverage_mask(sparse: &SparseDepthMap) -> Grid<bool> {
    let (w, h) = sparse.dims();
    let span: Vec<Option<(usize, usize)>> = (0..w)
        .map(|c| {
            let first = (0..h).find(|&r| sparse.get(r, c).is_some())?;
            let last = (0..h).rev().find(|&r| sparse.get(r, c).is_some())?;
            (last > first).then_some((first, last))
        })
        .collect();
    Grid::from_fn(w, h, |r, c| span[c].is_some_and(|(a, b)| (a..=b).contains(&r)))
}

pub fn depth_rmse(pred: &DenseDepthMap, gt: &DenseDepthMap, valid: &Grid<bool>) -> Result<f64> {
    pred.depth.ensure_same_dims(&gt.depth)?;
    pred.depth.ensure_same_dims(valid)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (row, col, v) in valid.indexed() {
        if !*v {
            continue;
        }
        if let (Some(a), Some(b)) = (pred.value(row, col), gt.value(row, col)) {
            sum += (a - b) * (a - b);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyValidSet);
    }
    Ok((sum / n as f64).sqrt())
}
