//! Labeled patches for the image classifier.
//!
//! The training worlds are disjoint from the shipped evaluation scenes: boxes
//! of other sizes, grey levels and positions, including small objects close
//! to the robot so that low obstacles appear in the corpus.

use super::{ground_truth_from_rendering, render_camera, AaBox, Scene};
use crate::error::Result;
use crate::freespace::{
    balance_classes, labeled_tiles, train_classifier, ClassifierOptions, KernelRlsClassifier,
    LabeledPatch, DEFAULT_HEIGHT_TOL,
};
use crate::geometry::RigExtrinsics;

pub const TILE_STRIDE: usize = 8;
pub const MIN_OCCUPIED_FRACTION: f64 = 0.25;
pub const MAX_CLASS_RATIO: f64 = 3.0;

type BoxSpec = ([f64; 3], [f64; 3], f64);

const TRAINING_LAYOUTS: [&[BoxSpec]; 5] = [
    &[
        ([2.0, 0.8, 0.0], [2.5, 1.4, 0.6], 0.3),
        ([4.0, -2.0, 0.0], [4.4, -1.0, 1.0], 0.85),
        ([1.1, -0.3, 0.0], [1.25, -0.15, 0.12], 0.05),
    ],
    &[
        ([1.2, -0.9, 0.0], [1.4, -0.6, 0.2], 0.1),
        ([6.0, 1.0, 0.0], [6.5, 3.0, 2.0], 0.65),
        ([1.7, 0.2, 0.0], [1.85, 0.35, 0.15], 1.0),
    ],
    &[
        ([1.0, 0.5, 0.0], [1.2, 0.7, 0.1], 0.95),
        ([3.5, -0.5, 0.0], [3.8, 0.2, 0.5], 0.4),
        ([7.0, -8.0, 0.0], [7.2, 8.0, 3.0], 0.7),
    ],
    &[
        ([2.5, -1.2, 0.0], [2.7, 1.2, 1.5], 0.15),
        ([1.3, 0.9, 0.0], [1.5, 1.1, 0.18], 0.8),
        ([0.9, -1.3, 0.0], [1.05, -1.15, 0.1], 0.3),
    ],
    &[
        ([4.0, -6.0, 0.0], [4.2, 6.0, 2.0], 0.9),
        ([1.6, -0.5, 0.0], [1.72, -0.38, 0.12], 0.6),
        ([2.0, 1.5, 0.0], [2.3, 1.8, 0.3], 0.05),
    ],
];

pub fn training_scenes() -> Vec<Scene> {
    TRAINING_LAYOUTS
        .iter()
        .map(|layout| Scene {
            boxes: layout.iter().map(|&(lo, hi, i)| AaBox::new(lo, hi, i)).collect(),
            ..Scene::default()
        })
        .collect()
}

/// Tiles from every training scene rendered at `width × height`, with the
/// free class thinned to at most [`MAX_CLASS_RATIO`] times the occupied one.
pub fn training_corpus(rig: &RigExtrinsics, width: usize, height: usize) -> Result<Vec<LabeledPatch>> {
    let mut samples = Vec::new();
    for scene in training_scenes() {
        let r = render_camera(&scene, rig, width, height);
        let truth = ground_truth_from_rendering(&scene, &r, DEFAULT_HEIGHT_TOL);
        samples.extend(labeled_tiles(&r.grey, &truth, TILE_STRIDE, MIN_OCCUPIED_FRACTION)?);
    }
    Ok(balance_classes(&samples, MAX_CLASS_RATIO))
}

/// Classifier trained on [`training_corpus`] with default options.
pub fn train_image_classifier(
    rig: &RigExtrinsics,
    width: usize,
    height: usize,
) -> Result<KernelRlsClassifier> {
    train_classifier(&training_corpus(rig, width, height)?, ClassifierOptions::default())
}
