//! File formats: netpbm rasters, text point clouds, `key=value` configs and
//! occupancy-grid files.

pub mod cloud;
pub mod config;
pub mod ogmap_file;
pub mod pnm;

pub use cloud::{read_point_cloud, write_point_cloud};
pub use config::{
    gp_from_config, grid_from_config, rig_from_config, scene_from_config, write_scene_config, ConfigDocument,
    GridConfig, SceneConfig,
};
pub use ogmap_file::{read_ogmap, read_ogmap_header, write_ogmap_confidence, write_ogmap_header, write_ogmap_pgm};
pub use pnm::{
    read_depth, read_f64_map, read_grey, read_mask, read_pfm, read_pgm, write_depth, write_f64_map, write_grey,
    write_known, write_mask, write_pfm, write_pgm, MASK_FREE, MASK_OCCUPIED, MASK_UNKNOWN, UNKNOWN_DEPTH,
};
