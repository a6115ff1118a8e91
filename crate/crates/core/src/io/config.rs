//! `key=value` documents with optional `[section]` headers.
//!
//! Keys before the first header belong to an unnamed section. A loader for
//! one section reads the unnamed section together with its own named one, so
//! a file may be a bare list of keys or a combined file for several loaders.
//! Unknown keys and unknown sections are errors.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::freespace::{GridGeometry, DEFAULT_HEIGHT_TOL, DEFAULT_UNC_TOL};
use crate::geometry::{OcclusionFilter, RigExtrinsics};
use crate::gp::GpParams;
use crate::scene::{AaBox, LidarScanSpec, Scene};

pub const SECTIONS: [&str; 4] = ["rig", "gp", "grid", "scene"];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDocument {
    /// Sections in file order; the unnamed section is `""`.
    pub sections: Vec<(String, Vec<Entry>)>,
}

impl ConfigDocument {
    /// Parses a document. `repeatable` keys may occur more than once per
    /// section; every other key must be unique.
    pub fn parse(text: &str, repeatable: &[&str]) -> Result<Self> {
        let mut doc = ConfigDocument {
            sections: vec![(String::new(), Vec::new())],
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let data = raw.split('#').next().unwrap_or("").trim();
            if data.is_empty() {
                continue;
            }
            if let Some(rest) = data.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(line, "section header must end with ']'"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::parse(line, format!("unknown section [{name}]")));
                }
                if doc.sections.iter().any(|(n, _)| n == name) {
                    return Err(Error::parse(line, format!("section [{name}] appears twice")));
                }
                doc.sections.push((name.to_string(), Vec::new()));
                continue;
            }
            let (key, value) = data
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected key=value, got {data:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::parse(line, "empty key"));
            }
            let entries = &mut doc.sections.last_mut().expect("unnamed section").1;
            if !repeatable.contains(&key) && entries.iter().any(|e| e.key == key) {
                return Err(Error::parse(line, format!("duplicate key {key:?}")));
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(doc)
    }

    /// Entries of the unnamed section followed by those of `section`.
    pub fn entries_for(&self, section: &str) -> Vec<&Entry> {
        self.sections
            .iter()
            .filter(|(n, _)| n.is_empty() || n == section)
            .flat_map(|(_, e)| e.iter())
            .collect()
    }
}

/// Checks keys against an allow-list and indexes the section by key.
struct Section<'a> {
    name: &'static str,
    entries: Vec<&'a Entry>,
    by_key: HashMap<&'a str, &'a Entry>,
}

impl<'a> Section<'a> {
    fn new(doc: &'a ConfigDocument, name: &'static str, known: &[&str]) -> Result<Self> {
        let entries = doc.entries_for(name);
        let mut by_key = HashMap::new();
        for e in &entries {
            if !known.contains(&e.key.as_str()) {
                return Err(Error::parse(
                    e.line,
                    format!("unknown key {:?} for [{name}]", e.key),
                ));
            }
            if by_key.insert(e.key.as_str(), *e).is_some() && !matches!(e.key.as_str(), "box") {
                return Err(Error::parse(e.line, format!("duplicate key {:?}", e.key)));
            }
        }
        Ok(Self {
            name,
            entries,
            by_key,
        })
    }

    fn f64(&self, key: &str, target: &mut f64) -> Result<()> {
        if let Some(e) = self.by_key.get(key) {
            *target = parse_f64(e)?;
        }
        Ok(())
    }

    fn usize(&self, key: &str, target: &mut usize) -> Result<()> {
        if let Some(e) = self.by_key.get(key) {
            *target = e.value.parse().map_err(|_| {
                Error::parse(
                    e.line,
                    format!("{} in [{}] must be a non-negative integer, got {:?}", key, self.name, e.value),
                )
            })?;
        }
        Ok(())
    }

    fn u64(&self, key: &str, target: &mut u64) -> Result<()> {
        let mut v = *target as usize;
        self.usize(key, &mut v)?;
        *target = v as u64;
        Ok(())
    }

    fn str(&self, key: &str) -> Option<&'a Entry> {
        self.by_key.get(key).copied()
    }
}

fn parse_f64(e: &Entry) -> Result<f64> {
    match e.value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(
            e.line,
            format!("{} must be a finite number, got {:?}", e.key, e.value),
        )),
    }
}

fn with_line(line: usize, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::InvalidParameter(m) => Error::Range { line, message: m },
        other => other,
    })
}

fn last_line(section: &Section) -> usize {
    section.entries.iter().map(|e| e.line).max().unwrap_or(0)
}

pub const RIG_KEYS: [&str; 6] = [
    "cam_height",
    "lidar_height",
    "frontal_offset",
    "lateral_offset",
    "lidar_vfov_halfangle_deg",
    "lidar_max_range",
];

/// Rig from `[rig]`; unspecified keys keep the defaults.
pub fn rig_from_config(doc: &ConfigDocument) -> Result<RigExtrinsics> {
    let s = Section::new(doc, "rig", &RIG_KEYS)?;
    let mut rig = RigExtrinsics::default();
    s.f64("cam_height", &mut rig.cam_height)?;
    s.f64("lidar_height", &mut rig.lidar_height)?;
    s.f64("frontal_offset", &mut rig.frontal_offset)?;
    s.f64("lateral_offset", &mut rig.lateral_offset)?;
    let mut half_deg = rig.lidar_vfov_halfangle.to_degrees();
    s.f64("lidar_vfov_halfangle_deg", &mut half_deg)?;
    rig.lidar_vfov_halfangle = half_deg.to_radians();
    s.f64("lidar_max_range", &mut rig.lidar_max_range)?;
    with_line(last_line(&s), rig.validate())?;
    Ok(rig)
}

pub const GP_KEYS: [&str; 9] = [
    "spatial_width",
    "intensity_width",
    "noise_variance",
    "signal_variance",
    "patch_size",
    "patch_overlap",
    "min_train_points",
    "occlusion_radius",
    "occlusion_gap",
];

/// GP hyperparameters and the pre-fusion occlusion filter from `[gp]`.
pub fn gp_from_config(doc: &ConfigDocument) -> Result<(GpParams, OcclusionFilter)> {
    let s = Section::new(doc, "gp", &GP_KEYS)?;
    let mut p = GpParams::default();
    s.f64("spatial_width", &mut p.spatial_width)?;
    s.f64("intensity_width", &mut p.intensity_width)?;
    s.f64("noise_variance", &mut p.noise_variance)?;
    s.f64("signal_variance", &mut p.signal_variance)?;
    s.usize("patch_size", &mut p.patch_size)?;
    s.usize("patch_overlap", &mut p.patch_overlap)?;
    s.usize("min_train_points", &mut p.min_train_points)?;
    let mut occ = OcclusionFilter::default();
    s.usize("occlusion_radius", &mut occ.radius)?;
    s.f64("occlusion_gap", &mut occ.relative_gap)?;
    with_line(last_line(&s), p.validate())?;
    with_line(last_line(&s), occ.validate())?;
    Ok((p, occ))
}

/// Occupancy-grid layout and free-space thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub geometry: GridGeometry,
    pub height_tol: f64,
    pub unc_tol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            geometry: GridGeometry::default(),
            height_tol: DEFAULT_HEIGHT_TOL,
            unc_tol: DEFAULT_UNC_TOL,
        }
    }
}

pub const GRID_KEYS: [&str; 5] = ["cell_size", "extent_x", "extent_y", "height_tol", "unc_tol"];

pub fn grid_from_config(doc: &ConfigDocument) -> Result<GridConfig> {
    let s = Section::new(doc, "grid", &GRID_KEYS)?;
    let mut g = GridConfig::default();
    s.f64("cell_size", &mut g.geometry.cell_size)?;
    s.f64("extent_x", &mut g.geometry.extent_x)?;
    s.f64("extent_y", &mut g.geometry.extent_y)?;
    s.f64("height_tol", &mut g.height_tol)?;
    s.f64("unc_tol", &mut g.unc_tol)?;
    with_line(last_line(&s), g.geometry.validate())?;
    if !(g.height_tol >= 0.0 && g.unc_tol >= 0.0) {
        return Err(Error::Range {
            line: last_line(&s),
            message: "height_tol and unc_tol must be non-negative".into(),
        });
    }
    Ok(g)
}

/// A world plus the camera resolution and beam layout used to observe it.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub scene: Scene,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Degrees.
    pub azimuth_step_deg: f64,
    pub range_noise_std: f64,
    pub noise_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            scene: Scene::default(),
            width: 720,
            height: 360,
            channels: 16,
            azimuth_step_deg: 0.2,
            range_noise_std: 0.0,
            noise_seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn scan_spec(&self, rig: &RigExtrinsics) -> LidarScanSpec {
        let mut spec = LidarScanSpec::evenly_spaced(
            self.channels,
            rig.lidar_vfov_halfangle,
            self.azimuth_step_deg.to_radians(),
            rig.lidar_max_range,
        );
        spec.range_noise_std = self.range_noise_std;
        spec.noise_seed = self.noise_seed;
        spec
    }
}

pub const SCENE_KEYS: [&str; 13] = [
    "builtin",
    "width",
    "height",
    "channels",
    "azimuth_step_deg",
    "range_noise_std",
    "noise_seed",
    "floor_height",
    "floor_intensity",
    "background_intensity",
    "texture_cell",
    "texture_amplitude",
    "box",
];

/// Scene files: `[scene]` keys with `box=xmin,ymin,zmin,xmax,ymax,zmax,intensity`
/// repeated once per obstacle. `builtin=NAME` starts from a shipped scene.
pub fn scene_from_config(doc: &ConfigDocument) -> Result<SceneConfig> {
    let s = Section::new(doc, "scene", &SCENE_KEYS)?;
    let mut cfg = SceneConfig::default();
    if let Some(e) = s.str("builtin") {
        cfg.scene = Scene::builtin(&e.value)
            .ok_or_else(|| Error::parse(e.line, format!("unknown builtin scene {:?}", e.value)))?;
    }
    s.usize("width", &mut cfg.width)?;
    s.usize("height", &mut cfg.height)?;
    s.usize("channels", &mut cfg.channels)?;
    s.f64("azimuth_step_deg", &mut cfg.azimuth_step_deg)?;
    s.f64("range_noise_std", &mut cfg.range_noise_std)?;
    s.u64("noise_seed", &mut cfg.noise_seed)?;
    s.f64("floor_height", &mut cfg.scene.floor_height)?;
    s.f64("floor_intensity", &mut cfg.scene.floor_intensity)?;
    s.f64("background_intensity", &mut cfg.scene.background_intensity)?;
    s.f64("texture_cell", &mut cfg.scene.floor_texture.cell_size)?;
    s.f64("texture_amplitude", &mut cfg.scene.floor_texture.amplitude)?;
    for e in s.entries.iter().filter(|e| e.key == "box") {
        cfg.scene.boxes.push(parse_box(e)?);
    }
    let line = last_line(&s);
    if cfg.width == 0 || cfg.height == 0 || cfg.channels == 0 {
        return Err(Error::Range {
            line,
            message: "width, height and channels must be positive".into(),
        });
    }
    if !(cfg.azimuth_step_deg > 0.0) || !(cfg.range_noise_std >= 0.0) {
        return Err(Error::Range {
            line,
            message: "azimuth_step_deg must be positive and range_noise_std non-negative".into(),
        });
    }
    with_line(line, cfg.scene.validate())?;
    Ok(cfg)
}

fn parse_box(e: &Entry) -> Result<AaBox> {
    let v: Vec<f64> = e
        .value
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(e.line, format!("box values must be numbers: {:?}", e.value)))?;
    if v.len() != 7 {
        return Err(Error::parse(
            e.line,
            format!("box needs 7 values (xmin,ymin,zmin,xmax,ymax,zmax,intensity), got {}", v.len()),
        ));
    }
    Ok(AaBox::new([v[0], v[1], v[2]], [v[3], v[4], v[5]], v[6]))
}

pub fn write_scene_config(cfg: &SceneConfig) -> String {
    let s = &cfg.scene;
    let mut out = String::from("[scene]\n");
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    kv("width", cfg.width.to_string());
    kv("height", cfg.height.to_string());
    kv("channels", cfg.channels.to_string());
    kv("azimuth_step_deg", format!("{}", cfg.azimuth_step_deg));
    kv("range_noise_std", format!("{}", cfg.range_noise_std));
    kv("noise_seed", cfg.noise_seed.to_string());
    kv("floor_height", format!("{}", s.floor_height));
    kv("floor_intensity", format!("{}", s.floor_intensity));
    kv("background_intensity", format!("{}", s.background_intensity));
    kv("texture_cell", format!("{}", s.floor_texture.cell_size));
    kv("texture_amplitude", format!("{}", s.floor_texture.amplitude));
    for b in &s.boxes {
        kv(
            "box",
            format!(
                "{},{},{},{},{},{},{}",
                b.min[0], b.min[1], b.min[2], b.max[0], b.max[1], b.max[2], b.intensity
            ),
        );
    }
    out
}
