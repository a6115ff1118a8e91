//! Block-based image classifier for free space.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::hog::{extract_patch, hog_features, HogFeature, Patch, PATCH};
use super::mask::{FreeSpaceMask, Label};
use crate::error::{Error, Result};
use crate::raster::{GreyImage, Grid};

/// Anything that scores a patch descriptor; positive scores mean free.
pub trait GroundClassifier {
    fn score(&self, feature: &HogFeature) -> f64;

    /// Score exactly zero resolves to occupied.
    fn predict(&self, feature: &HogFeature) -> Label {
        label_for_score(self.score(feature))
    }
}

pub fn label_for_score(score: f64) -> Label {
    if score > 0.0 {
        Label::Free
    } else {
        Label::Occupied
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPatch {
    pub patch: Patch,
    pub free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierOptions {
    /// RBF width in feature space; `None` uses the median pairwise distance.
    pub kernel_width: Option<f64>,
    /// Ridge weight λ.
    pub lambda: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        Self {
            kernel_width: None,
            lambda: 1e-3,
        }
    }
}

/// Kernel regularized least squares on HoG descriptors with an RBF kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRlsClassifier {
    pub features: Vec<HogFeature>,
    pub coefficients: Vec<f64>,
    pub kernel_width: f64,
    pub lambda: f64,
}

impl KernelRlsClassifier {
    fn rbf(&self, a: &HogFeature, b: &HogFeature) -> f64 {
        rbf(a, b, self.kernel_width)
    }
}

fn rbf(a: &HogFeature, b: &HogFeature, width: f64) -> f64 {
    (-a.squared_distance(b) / (2.0 * width * width)).exp()
}

impl GroundClassifier for KernelRlsClassifier {
    fn score(&self, feature: &HogFeature) -> f64 {
        self.features
            .iter()
            .zip(&self.coefficients)
            .map(|(f, c)| c * self.rbf(f, feature))
            .sum()
    }
}

/// Median of all pairwise descriptor distances (1.0 if that median is zero).
pub fn median_pairwise_distance(features: &[HogFeature]) -> f64 {
    let mut d: Vec<f64> = Vec::with_capacity(features.len() * features.len().saturating_sub(1) / 2);
    for i in 0..features.len() {
        for j in i + 1..features.len() {
            d.push(features[i].squared_distance(&features[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let m = if d.len() % 2 == 0 {
        0.5 * (d[mid - 1] + d[mid])
    } else {
        d[mid]
    };
    if m > 1e-12 {
        m
    } else {
        1.0
    }
}

/// Solves `(K + λI)c = y` with labels `y ∈ {−1, +1}` (free = +1).
pub fn train_classifier(samples: &[LabeledPatch], options: ClassifierOptions) -> Result<KernelRlsClassifier> {
    if !samples.iter().any(|s| s.free) {
        return Err(Error::DegenerateLabels("free"));
    }
    if !samples.iter().any(|s| !s.free) {
        return Err(Error::DegenerateLabels("occupied"));
    }
    if !(options.lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    let features: Vec<HogFeature> = samples.iter().map(|s| hog_features(&s.patch)).collect();
    let kernel_width = match options.kernel_width {
        Some(w) if w > 0.0 => w,
        Some(_) => return Err(Error::InvalidParameter("kernel width must be positive".into())),
        None => median_pairwise_distance(&features),
    };
    let n = features.len();
    let mut k = DMatrix::from_fn(n, n, |i, j| rbf(&features[i], &features[j], kernel_width));
    for i in 0..n {
        k[(i, i)] += options.lambda;
    }
    let y = DVector::from_iterator(n, samples.iter().map(|s| if s.free { 1.0 } else { -1.0 }));
    let chol = Cholesky::new(k).ok_or(Error::SingularKernel { patch: 0 })?;
    let c = chol.solve(&y);
    Ok(KernelRlsClassifier {
        features,
        coefficients: c.iter().copied().collect(),
        kernel_width,
        lambda: options.lambda,
    })
}

/// Classifies non-overlapping 16×16 tiles and broadcasts each label to its
/// pixels. Tiles that run past the border sample edge-clamped pixels.
pub fn classify_image(grey: &GreyImage, clf: &dyn GroundClassifier) -> FreeSpaceMask {
    let (w, h) = grey.dims();
    let mut mask = Grid::filled(w, h, Label::Unknown);
    if w == 0 || h == 0 {
        return mask;
    }
    for row0 in (0..h).step_by(PATCH) {
        for col0 in (0..w).step_by(PATCH) {
            let label = clf.predict(&hog_features(&extract_patch(grey, row0, col0)));
            for r in row0..(row0 + PATCH).min(h) {
                for c in col0..(col0 + PATCH).min(w) {
                    mask.set(r, c, label);
                }
            }
        }
    }
    mask
}

/// Tiles on a `stride` lattice labeled from a ground-truth mask. A tile is
/// occupied when at least `min_occupied_fraction` of its known pixels are
/// occupied, free when none are; tiles in between, or with fewer than half of
/// their pixels known, are skipped.
pub fn labeled_tiles(
    grey: &GreyImage,
    truth: &FreeSpaceMask,
    stride: usize,
    min_occupied_fraction: f64,
) -> Result<Vec<LabeledPatch>> {
    grey.ensure_same_dims(truth)?;
    let (w, h) = grey.dims();
    let stride = stride.max(1);
    let mut out = Vec::new();
    if w < PATCH || h < PATCH {
        return Ok(out);
    }
    for row0 in (0..=h - PATCH).step_by(stride) {
        for col0 in (0..=w - PATCH).step_by(stride) {
            let (mut known, mut occupied) = (0usize, 0usize);
            for r in row0..row0 + PATCH {
                for c in col0..col0 + PATCH {
                    match truth.get(r, c) {
                        Label::Free => known += 1,
                        Label::Occupied => {
                            known += 1;
                            occupied += 1;
                        }
                        Label::Unknown => {}
                    }
                }
            }
            if 2 * known < PATCH * PATCH {
                continue;
            }
            let free = if occupied == 0 {
                true
            } else if occupied as f64 >= min_occupied_fraction * known as f64 {
                false
            } else {
                continue;
            };
            out.push(LabeledPatch {
                patch: extract_patch(grey, row0, col0),
                free,
            });
        }
    }
    Ok(out)
}

/// Thins the larger class by keeping every k-th sample so that it is at most
/// `max_ratio` times the size of the smaller one. Order is preserved.
pub fn balance_classes(samples: &[LabeledPatch], max_ratio: f64) -> Vec<LabeledPatch> {
    let n_free = samples.iter().filter(|s| s.free).count();
    let n_occ = samples.len() - n_free;
    let (small, large_is_free) = if n_free > n_occ { (n_occ, true) } else { (n_free, false) };
    let large = samples.len() - small;
    let cap = ((small as f64 * max_ratio).ceil() as usize).max(1);
    if small == 0 || large <= cap {
        return samples.to_vec();
    }
    let mut seen = 0usize;
    let mut kept = 0usize;
    samples
        .iter()
        .filter(|s| {
            if s.free != large_is_free {
                return true;
            }
            // Keep sample `seen` when it crosses the next evenly spaced slot.
            let take = (seen * cap) / large >= kept;
            seen += 1;
            if take {
                kept += 1;
            }
            take
        })
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(seed: usize) -> Patch {
        let mut p = [0.0; PATCH * PATCH];
        for (i, v) in p.iter_mut().enumerate() {
            *v = ((i * 7919 + seed * 104_729) % 17) as f64 / 16.0;
        }
        p
    }

    #[test]
    fn singleton_classes_are_separated() {
        let samples = [
            LabeledPatch {
                patch: textured(1),
                free: true,
            },
            LabeledPatch {
                patch: [0.3; PATCH * PATCH],
                free: false,
            },
        ];
        let clf = train_classifier(&samples, ClassifierOptions::default()).unwrap();
        assert_eq!(clf.predict(&hog_features(&samples[0].patch)), Label::Free);
        assert_eq!(clf.predict(&hog_features(&samples[1].patch)), Label::Occupied);
    }

    #[test]
    fn heavy_regularization_drives_scores_to_zero() {
        let samples = [
            LabeledPatch {
                patch: textured(1),
                free: true,
            },
            LabeledPatch {
                patch: [0.3; PATCH * PATCH],
                free: false,
            },
        ];
        let clf = train_classifier(
            &samples,
            ClassifierOptions {
                kernel_width: None,
                lambda: 1e15,
            },
        )
        .unwrap();
        for s in &samples {
            assert!(clf.score(&hog_features(&s.patch)).abs() < 1e-14);
        }
        assert_eq!(label_for_score(0.0), Label::Occupied);
    }

    #[test]
    fn degenerate_labels() {
        let only_free = [LabeledPatch {
            patch: textured(2),
            free: true,
        }];
        assert_eq!(
            train_classifier(&only_free, ClassifierOptions::default()),
            Err(Error::DegenerateLabels("occupied"))
        );
    }

    #[test]
    fn small_image_uses_one_clamped_tile() {
        struct Always(f64);
        impl GroundClassifier for Always {
            fn score(&self, _: &HogFeature) -> f64 {
                self.0
            }
        }
        let grey = Grid::filled(5, 3, 0.5);
        let mask = classify_image(&grey, &Always(1.0));
        assert!(mask.as_slice().iter().all(|l| *l == Label::Free));
        let mask = classify_image(&grey, &Always(0.0));
        assert!(mask.as_slice().iter().all(|l| *l == Label::Occupied));
    }

    #[test]
    fn median_distance() {
        let a = HogFeature([0.0; 36]);
        let mut b = HogFeature([0.0; 36]);
        b.0[0] = 1.0;
        let mut c = HogFeature([0.0; 36]);
        c.0[0] = 3.0;
        // distances 1, 3, 2 → median 2
        assert_eq!(median_pairwise_distance(&[a, b, c]), 2.0);
        assert_eq!(median_pairwise_distance(&[a, a]), 1.0);
    }
}
