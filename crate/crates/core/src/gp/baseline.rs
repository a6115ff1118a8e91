//! Non-probabilistic completion baselines used for comparison.

use crate::error::{Error, Result};
use crate::raster::{DenseDepthMap, SparseDepthMap};

/// Filled rows per column, sorted ascending, with their depths.
struct ColumnIndex {
    columns: Vec<Vec<(usize, f64)>>,
    occupied_cols: Vec<usize>,
}

impl ColumnIndex {
    fn new(sparse: &SparseDepthMap) -> Result<Self> {
        let mut columns = vec![Vec::new(); sparse.width()];
        for (r, c, v) in sparse.indexed() {
            if let Some(d) = v {
                columns[c].push((r, *d));
            }
        }
        let occupied_cols: Vec<usize> = columns
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_empty())
            .map(|(c, _)| c)
            .collect();
        if occupied_cols.is_empty() {
            return Err(Error::EmptyMap);
        }
        Ok(Self {
            columns,
            occupied_cols,
        })
    }

    /// Nearest filled pixel by Euclidean distance; ties go to the smaller row,
    /// then the smaller column.
    fn nearest(&self, row: usize, col: usize) -> (usize, usize, f64) {
        // (dist², row, col, value)
        let mut best: Option<(usize, usize, usize, f64)> = None;
        let better = |cand: (usize, usize, usize, f64), best: &Option<(usize, usize, usize, f64)>| match best {
            None => true,
            Some(b) => (cand.0, cand.1, cand.2) < (b.0, b.1, b.2),
        };
        let start = self.occupied_cols.partition_point(|&c| c < col);
        let (mut left, mut right) = (start, start);
        loop {
            let left_gap = if left > 0 {
                Some(col - self.occupied_cols[left - 1])
            } else {
                None
            };
            let right_gap = if right < self.occupied_cols.len() {
                Some(self.occupied_cols[right] - col)
            } else {
                None
            };
            let (gap, c) = match (left_gap, right_gap) {
                (None, None) => break,
                (Some(l), Some(r)) if l < r => {
                    left -= 1;
                    (l, self.occupied_cols[left])
                }
                (Some(l), None) => {
                    left -= 1;
                    (l, self.occupied_cols[left])
                }
                (_, Some(r)) => {
                    right += 1;
                    (r, self.occupied_cols[right - 1])
                }
            };
            if let Some(b) = best {
                if gap * gap > b.0 {
                    break;
                }
            }
            let entries = &self.columns[c];
            let idx = entries.partition_point(|&(r, _)| r < row);
            for k in [idx.wrapping_sub(1), idx] {
                if let Some(&(r, v)) = entries.get(k) {
                    let dr = r.abs_diff(row);
                    let cand = (dr * dr + gap * gap, r, c, v);
                    if better(cand, &best) {
                        best = Some(cand);
                    }
                }
            }
        }
        let b = best.expect("at least one filled column");
        (b.1, b.2, b.3)
    }
}

/// Every empty pixel takes the value of its nearest filled pixel.
pub fn baseline_nearest(sparse: &SparseDepthMap) -> Result<DenseDepthMap> {
    let index = ColumnIndex::new(sparse)?;
    let mut out = DenseDepthMap::unknown(sparse.width(), sparse.height());
    for r in 0..sparse.height() {
        for c in 0..sparse.width() {
            let v = match sparse.get(r, c) {
                Some(d) => *d,
                None => index.nearest(r, c).2,
            };
            out.set(r, c, Some(v));
        }
    }
    Ok(out)
}

/// Inverse-distance-weighted mean of filled pixels within `radius` pixels.
/// Filled pixels keep their own value; pixels with no filled neighbour in
/// range stay unknown.
pub fn baseline_idw(sparse: &SparseDepthMap, power: f64, radius: f64) -> Result<DenseDepthMap> {
    if !(power >= 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidParameter(
            "idw needs power >= 0 and radius > 0".into(),
        ));
    }
    let index = ColumnIndex::new(sparse)?;
    let (width, height) = sparse.dims();
    let mut out = DenseDepthMap::unknown(width, height);
    let reach = radius.floor() as usize;
    let r2 = radius * radius;
    for r in 0..height {
        for c in 0..width {
            if let Some(d) = sparse.get(r, c) {
                out.set(r, c, Some(*d));
                continue;
            }
            let lo = index.occupied_cols.partition_point(|&k| k + reach < c);
            let (mut sw, mut swv) = (0.0, 0.0);
            for &k in index.occupied_cols[lo..].iter().take_while(|&&k| k <= c + reach) {
                let dc = k.abs_diff(c) as f64;
                let entries = &index.columns[k];
                let first = entries.partition_point(|&(rr, _)| rr + reach < r);
                for &(rr, v) in entries[first..].iter().take_while(|&&(rr, _)| rr <= r + reach) {
                    let dr = rr.abs_diff(r) as f64;
                    let dist2 = dr * dr + dc * dc;
                    if dist2 <= r2 {
                        let w = dist2.powf(-power / 2.0);
                        sw += w;
                        swv += w * v;
                    }
                }
            }
            if sw > 0.0 {
                out.set(r, c, Some(swv / sw));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Grid;

    fn brute_nearest(sparse: &SparseDepthMap, row: usize, col: usize) -> f64 {
        let mut best: Option<(usize, usize, usize, f64)> = None;
        for (r, c, v) in sparse.indexed() {
            if let Some(d) = v {
                let key = (r.abs_diff(row).pow(2) + c.abs_diff(col).pow(2), r, c);
                if best.map_or(true, |b| key < (b.0, b.1, b.2)) {
                    best = Some((key.0, key.1, key.2, *d));
                }
            }
        }
        best.unwrap().3
    }

    #[test]
    fn single_pixel_fills_everything() {
        let mut sparse = Grid::filled(9, 7, None);
        sparse.set(3, 4, Some(6.0));
        let nn = baseline_nearest(&sparse).unwrap();
        let idw = baseline_idw(&sparse, 2.0, 100.0).unwrap();
        for r in 0..7 {
            for c in 0..9 {
                assert_eq!(nn.value(r, c), Some(6.0));
                assert!((idw.value(r, c).unwrap() - 6.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equidistant_tie_break_and_idw_mean() {
        let mut sparse = Grid::filled(5, 5, None);
        sparse.set(0, 2, Some(1.0));
        sparse.set(4, 2, Some(3.0));
        let nn = baseline_nearest(&sparse).unwrap();
        assert_eq!(nn.value(2, 2), Some(1.0));
        let idw = baseline_idw(&sparse, 2.0, 10.0).unwrap();
        assert!((idw.value(2, 2).unwrap() - 2.0).abs() < 1e-15);

        let mut sparse = Grid::filled(5, 5, None);
        sparse.set(2, 0, Some(1.0));
        sparse.set(2, 4, Some(3.0));
        assert_eq!(baseline_nearest(&sparse).unwrap().value(2, 2), Some(1.0));
    }

    #[test]
    fn checkerboard_is_reproduced() {
        let sparse = Grid::from_fn(12, 10, |r, c| {
            if (r + c) % 2 == 0 {
                Some((r * 12 + c) as f64)
            } else {
                None
            }
        });
        let nn = baseline_nearest(&sparse).unwrap();
        for (r, c, v) in sparse.indexed() {
            if let Some(d) = v {
                assert_eq!(nn.value(r, c), Some(*d));
            }
        }
    }

    #[test]
    fn nearest_matches_brute_force() {
        let sparse = Grid::from_fn(40, 30, |r, c| {
            let h = (r * 7919 + c * 104_729) % 97;
            if h < 4 {
                Some(h as f64 + r as f64 * 0.01)
            } else {
                None
            }
        });
        let nn = baseline_nearest(&sparse).unwrap();
        for r in 0..30 {
            for c in 0..40 {
                assert_eq!(nn.value(r, c), Some(brute_nearest(&sparse, r, c)), "({r},{c})");
            }
        }
    }

    #[test]
    fn idw_radius_leaves_far_pixels_unknown() {
        let mut sparse = Grid::filled(20, 5, None);
        sparse.set(2, 0, Some(1.0));
        let idw = baseline_idw(&sparse, 2.0, 3.0).unwrap();
        assert_eq!(idw.value(2, 3), Some(1.0));
        assert_eq!(idw.value(2, 4), None);
    }

    #[test]
    fn empty_map_errors() {
        let sparse: SparseDepthMap = Grid::filled(4, 4, None);
        assert_eq!(baseline_nearest(&sparse), Err(Error::EmptyMap));
        assert_eq!(baseline_idw(&sparse, 2.0, 3.0), Err(Error::EmptyMap));
    }
}
