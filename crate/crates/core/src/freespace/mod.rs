//! Free-space detection and occupancy-grid fusion.
//!
//! Three detectors produce labels: a ground-plane test on fused depth, a HoG
//! patch classifier on the grey image, and ray carving of raw LiDAR returns on
//! a floor grid. Grids are combined either conservatively (nearest obstacle
//! wins) or by trusting the image inside the LiDAR blind spot.

mod classifier;
pub mod hog;
mod mask;
mod ogmap;

pub use classifier::{
    balance_classes, classify_image, label_for_score, labeled_tiles, median_pairwise_distance, train_classifier,
    ClassifierOptions, GroundClassifier, KernelRlsClassifier, LabeledPatch,
};
pub use hog::{extract_patch, hog_features, HogFeature, Patch};
pub use mask::{
    ground_mask_from_depth, pixel_height, FreeSpaceMask, Label, DEFAULT_HEIGHT_TOL, DEFAULT_UNC_TOL,
};
pub use ogmap::{
    blind_radius, blind_spot_mask, fuse_ogmaps_conservative, fuse_ogmaps_uncertainty,
    grid_support_mask, image_ogmap, lidar_ogmap, ogmap_to_mask, GridGeometry, OgMap,
    FALLBACK_CONFIDENCE,
};
