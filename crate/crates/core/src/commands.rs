//! The `lidarfuse` command line.
//!
//! Each subcommand reads its inputs, runs one pipeline stage and writes fixed
//! file names into `--out`. Settings resolve as built-in defaults, then the
//! config files (`--rig`, `--gp`, `--grid`, `--scene`), then explicit flags.
//! On success a single `key=value` summary line goes to stdout.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::freespace::{
    blind_spot_mask, classify_image, fuse_ogmaps_conservative, fuse_ogmaps_uncertainty, ground_mask_from_depth,
    image_ogmap, lidar_ogmap, ogmap_to_mask, FreeSpaceMask, Label, OgMap,
};
use crate::geometry::{project_cloud, OcclusionFilter, RigExtrinsics};
use crate::gp::{fuse_cloud, GpParams};
use crate::io::{self, ConfigDocument, GridConfig, SceneConfig};
use crate::metrics::{depth_rmse, mask_metrics};
use crate::raster::{DenseDepthMap, Grid};
use crate::scene::{ground_truth_from_rendering, render_camera, sample_lidar, train_image_classifier};

#[derive(Debug, Parser)]
#[command(name = "lidarfuse", version, about = "LiDAR and spherical camera fusion for free-space detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene and scan it: grey.pgm, gt_depth.pfm, gt_mask.pgm, cloud.txt.
    Simulate(SimulateArgs),
    /// Project a point cloud onto the image grid: sparse_depth.pfm.
    Project(ProjectArgs),
    /// Complete depth by GP regression: depth.pfm, variance.pfm, known.pgm.
    Fuse(FuseArgs),
    /// Free-space mask from fused depth or from image appearance: fsd_mask.pgm.
    Fsd(FsdArgs),
    /// Occupancy grid: ogmap.pgm, ogmap.hdr, ogmap_confidence.pfm, ogmap_mask.pgm.
    Ogmap(OgmapArgs),
    /// Compare a prediction with ground truth (masks or depth maps).
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct RigArg {
    /// Rig config (`[rig]` keys).
    #[arg(long)]
    pub rig: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Grid config (`[grid]` keys).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Height above the floor still counted as free (m); overrides the grid config.
    #[arg(long = "height-tol")]
    pub height_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene file (`[scene]` keys, `builtin=NAME` and repeated `box=`).
    #[arg(long)]
    pub scene: PathBuf,
    #[command(flatten)]
    pub rig: RigArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// Camera image; only its size is used.
    #[arg(long)]
    pub grey: PathBuf,
    #[command(flatten)]
    pub rig: RigArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long)]
    pub grey: PathBuf,
    #[command(flatten)]
    pub rig: RigArg,
    /// GP config (`[gp]` keys).
    #[arg(long)]
    pub gp: Option<PathBuf>,
    /// Worker threads for patch regression. Output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FsdMode {
    /// Height of fused depth above the floor, gated by variance.
    Depth,
    /// HOG patch classifier on the grey image.
    Image,
}

#[derive(Debug, Args)]
pub struct FsdArgs {
    #[arg(long, value_enum, default_value_t = FsdMode::Depth)]
    pub mode: FsdMode,
    /// Fused depth (depth mode).
    #[arg(long)]
    pub depth: Option<PathBuf>,
    /// Fused variance (depth mode).
    #[arg(long)]
    pub variance: Option<PathBuf>,
    /// Grey image (image mode).
    #[arg(long)]
    pub grey: Option<PathBuf>,
    #[command(flatten)]
    pub rig: RigArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Largest variance (m²) still trusted; overrides the grid config.
    #[arg(long = "unc-tol")]
    pub unc_tol: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OgmapMode {
    Lidar,
    Image,
    Conservative,
    Uncertainty,
}

#[derive(Debug, Args)]
pub struct OgmapArgs {
    #[arg(long, value_enum)]
    pub mode: OgmapMode,
    /// Point cloud (lidar, conservative, uncertainty).
    #[arg(long)]
    pub cloud: Option<PathBuf>,
    /// Image free-space mask (image, conservative, uncertainty).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub rig: RigArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Size of ogmap_mask.pgm when no --mask is given.
    #[arg(long, default_value_t = 720)]
    pub width: usize,
    #[arg(long, default_value_t = 360)]
    pub height: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted mask (PGM) or depth map (PFM).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth of the same kind.
    #[arg(long)]
    pub gt: PathBuf,
    /// Also write the metrics as a JSON object to this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Failure with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandError {
    pub exit_code: i32,
    pub message: String,
}

impl CommandError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            exit_code: 2,
            message: message.into(),
        }
    }

    fn at(path: &Path, err: Error) -> Self {
        let mut e = Self::from(err);
        e.message = format!("{}: {}", path.display(), e.message);
        e
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CommandError {}

/// 3 for numerical failures, 2 for everything caused by the inputs.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SingularKernel { .. } | Error::DegenerateGeometry(_) => 3,
        _ => 2,
    }
}

impl From<Error> for CommandError {
    fn from(err: Error) -> Self {
        Self {
            exit_code: exit_code(&err),
            message: err.to_string(),
        }
    }
}

type CmdResult<T> = std::result::Result<T, CommandError>;

fn read_bytes(path: &Path) -> CmdResult<Vec<u8>> {
    fs::read(path).map_err(|e| CommandError::input(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| CommandError::input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> CmdResult<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CommandError::input(format!("cannot write {}: {e}", path.display())))
}

fn prepare_out(dir: &Path) -> CmdResult<()> {
    fs::create_dir_all(dir).map_err(|e| CommandError::input(format!("cannot create {}: {e}", dir.display())))
}

fn load_doc(path: &Path, repeatable: &[&str]) -> CmdResult<ConfigDocument> {
    ConfigDocument::parse(&read_text(path)?, repeatable).map_err(|e| CommandError::at(path, e))
}

fn load_rig(arg: &RigArg) -> CmdResult<RigExtrinsics> {
    match &arg.rig {
        Some(p) => io::rig_from_config(&load_doc(p, &[])?).map_err(|e| CommandError::at(p, e)),
        None => Ok(RigExtrinsics::default()),
    }
}

fn load_grid(args: &GridArgs, unc_tol: Option<f64>) -> CmdResult<GridConfig> {
    let mut g = match &args.grid {
        Some(p) => io::grid_from_config(&load_doc(p, &[])?).map_err(|e| CommandError::at(p, e))?,
        None => GridConfig::default(),
    };
    if let Some(t) = args.height_tol {
        g.height_tol = t;
    }
    if let Some(t) = unc_tol {
        g.unc_tol = t;
    }
    if !(g.height_tol >= 0.0 && g.unc_tol >= 0.0) {
        return Err(CommandError::input("--height-tol and --unc-tol must be non-negative"));
    }
    Ok(g)
}

fn load_gp(path: Option<&Path>) -> CmdResult<(GpParams, OcclusionFilter)> {
    match path {
        Some(p) => io::gp_from_config(&load_doc(p, &[])?).map_err(|e| CommandError::at(p, e)),
        None => Ok((GpParams::default(), OcclusionFilter::default())),
    }
}

fn load_cloud(path: &Path) -> CmdResult<Vec<crate::geometry::LidarPoint>> {
    io::read_point_cloud(&read_text(path)?).map_err(|e| CommandError::at(path, e))
}

fn load_with<T>(path: &Path, f: impl FnOnce(&[u8]) -> crate::Result<T>) -> CmdResult<T> {
    f(&read_bytes(path)?).map_err(|e| CommandError::at(path, e))
}

fn require<'a>(opt: &'a Option<PathBuf>, flag: &str, mode: &str) -> CmdResult<&'a Path> {
    opt.as_deref()
        .ok_or_else(|| CommandError::input(format!("--{flag} is required in {mode} mode")))
}

fn count(mask: &FreeSpaceMask, label: Label) -> usize {
    mask.as_slice().iter().filter(|l| **l == label).count()
}

/// Runs one parsed invocation and returns its summary line.
pub fn run(cli: &Cli) -> CmdResult<String> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Project(a) => project(a),
        Command::Fuse(a) => fuse(a),
        Command::Fsd(a) => fsd(a),
        Command::Ogmap(a) => ogmap(a),
        Command::Eval(a) => eval(a),
    }
}

fn simulate(a: &SimulateArgs) -> CmdResult<String> {
    let doc = load_doc(&a.scene, &["box"])?;
    let cfg: SceneConfig = io::scene_from_config(&doc).map_err(|e| CommandError::at(&a.scene, e))?;
    let rig = load_rig(&a.rig)?;
    let grid = load_grid(&a.grid, None)?;
    let spec = cfg.scan_spec(&rig);
    spec.validate(&rig)?;
    let rendering = render_camera(&cfg.scene, &rig, cfg.width, cfg.height);
    let gt_mask = ground_truth_from_rendering(&cfg.scene, &rendering, grid.height_tol);
    let cloud = sample_lidar(&cfg.scene, &rig, &spec);
    prepare_out(&a.out)?;
    write_file(&a.out, "grey.pgm", &io::write_grey(&rendering.grey))?;
    write_file(&a.out, "gt_depth.pfm", &io::write_depth(&rendering.depth))?;
    write_file(&a.out, "gt_mask.pgm", &io::write_mask(&gt_mask))?;
    write_file(&a.out, "cloud.txt", io::write_point_cloud(&cloud).as_bytes())?;
    Ok(format!(
        "simulate width={} height={} boxes={} points={} gt_free={} out={}",
        cfg.width,
        cfg.height,
        cfg.scene.boxes.len(),
        cloud.len(),
        count(&gt_mask, Label::Free),
        a.out.display()
    ))
}

fn project(a: &ProjectArgs) -> CmdResult<String> {
    let cloud = load_cloud(&a.cloud)?;
    let grey = load_with(&a.grey, io::read_grey)?;
    let rig = load_rig(&a.rig)?;
    let (w, h) = grey.dims();
    let sparse = project_cloud(&cloud, &rig, w, h).map_err(|e| CommandError::at(&a.cloud, e))?;
    prepare_out(&a.out)?;
    write_file(&a.out, "sparse_depth.pfm", &io::write_depth(&DenseDepthMap::from_sparse(&sparse)))?;
    Ok(format!(
        "project points={} filled={} width={w} height={h} out={}",
        cloud.len(),
        sparse.as_slice().iter().flatten().count(),
        a.out.display()
    ))
}

fn fuse(a: &FuseArgs) -> CmdResult<String> {
    if a.threads == 0 {
        return Err(CommandError::input("--threads must be at least 1"));
    }
    let cloud = load_cloud(&a.cloud)?;
    let grey = load_with(&a.grey, io::read_grey)?;
    let rig = load_rig(&a.rig)?;
    let (params, occlusion) = load_gp(a.gp.as_deref())?;
    let fused = fuse_cloud(&cloud, &grey, &rig, &params, &occlusion, a.threads).map_err(|e| match e {
        Error::EmptyCloud => CommandError::at(&a.cloud, e),
        e => e.into(),
    })?;
    prepare_out(&a.out)?;
    write_file(&a.out, "depth.pfm", &io::write_depth(&fused.dense))?;
    write_file(&a.out, "variance.pfm", &io::write_f64_map(&fused.variance))?;
    write_file(&a.out, "known.pgm", &io::write_known(&fused.dense.known))?;
    let (w, h) = grey.dims();
    Ok(format!(
        "fuse width={w} height={h} samples={} known={} threads={} out={}",
        fused.sparse.as_slice().iter().flatten().count(),
        fused.dense.known.as_slice().iter().filter(|k| **k).count(),
        a.threads,
        a.out.display()
    ))
}

fn fsd(a: &FsdArgs) -> CmdResult<String> {
    let rig = load_rig(&a.rig)?;
    let grid = load_grid(&a.grid, a.unc_tol)?;
    let mask = match a.mode {
        FsdMode::Depth => {
            let dpath = require(&a.depth, "depth", "depth")?;
            let vpath = require(&a.variance, "variance", "depth")?;
            let depth = load_with(dpath, io::read_depth)?;
            let variance = load_with(vpath, io::read_f64_map)?;
            ground_mask_from_depth(&depth, &variance, &rig, grid.height_tol, grid.unc_tol)?
        }
        FsdMode::Image => {
            let gpath = require(&a.grey, "grey", "image")?;
            let grey = load_with(gpath, io::read_grey)?;
            let (w, h) = grey.dims();
            let clf = train_image_classifier(&rig, w, h)?;
            classify_image(&grey, &clf)
        }
    };
    prepare_out(&a.out)?;
    write_file(&a.out, "fsd_mask.pgm", &io::write_mask(&mask))?;
    Ok(format!(
        "fsd mode={} free={} occupied={} unknown={} out={}",
        match a.mode {
            FsdMode::Depth => "depth",
            FsdMode::Image => "image",
        },
        count(&mask, Label::Free),
        count(&mask, Label::Occupied),
        count(&mask, Label::Unknown),
        a.out.display()
    ))
}

fn ogmap(a: &OgmapArgs) -> CmdResult<String> {
    let rig = load_rig(&a.rig)?;
    let grid = load_grid(&a.grid, None)?;
    let geometry = grid.geometry;
    let mode = match a.mode {
        OgmapMode::Lidar => "lidar",
        OgmapMode::Image => "image",
        OgmapMode::Conservative => "conservative",
        OgmapMode::Uncertainty => "uncertainty",
    };
    let lidar = |path: &Option<PathBuf>| -> CmdResult<OgMap> {
        let p = require(path, "cloud", mode)?;
        lidar_ogmap(&load_cloud(p)?, &rig, &geometry, grid.height_tol).map_err(|e| CommandError::at(p, e))
    };
    let mut size = (a.width, a.height);
    let mut image = |path: &Option<PathBuf>| -> CmdResult<OgMap> {
        let p = require(path, "mask", mode)?;
        let mask = load_with(p, io::read_mask)?;
        size = mask.dims();
        Ok(image_ogmap(&mask, &rig, &geometry)?)
    };
    let map = match a.mode {
        OgmapMode::Lidar => lidar(&a.cloud)?,
        OgmapMode::Image => image(&a.mask)?,
        OgmapMode::Conservative => fuse_ogmaps_conservative(&lidar(&a.cloud)?, &image(&a.mask)?)?,
        OgmapMode::Uncertainty => {
            fuse_ogmaps_uncertainty(&lidar(&a.cloud)?, &image(&a.mask)?, &blind_spot_mask(&rig, &geometry))?
        }
    };
    if size.0 == 0 || size.1 == 0 {
        return Err(CommandError::input("--width and --height must be positive"));
    }
    let projected = ogmap_to_mask(&map, &rig, size.0, size.1);
    prepare_out(&a.out)?;
    write_file(&a.out, "ogmap.pgm", &io::write_ogmap_pgm(&map))?;
    write_file(&a.out, "ogmap.hdr", io::write_ogmap_header(&geometry).as_bytes())?;
    write_file(&a.out, "ogmap_confidence.pfm", &io::write_ogmap_confidence(&map))?;
    write_file(&a.out, "ogmap_mask.pgm", &io::write_mask(&projected))?;
    Ok(format!(
        "ogmap mode={mode} rows={} cols={} free={} occupied={} unknown={} out={}",
        geometry.rows(),
        geometry.cols(),
        map.count(Label::Free),
        map.count(Label::Occupied),
        map.count(Label::Unknown),
        a.out.display()
    ))
}

fn eval(a: &EvalArgs) -> CmdResult<String> {
    let pred = read_bytes(&a.pred)?;
    let gt = read_bytes(&a.gt)?;
    let (line, json) = if pred.starts_with(b"P5") {
        let p = io::read_mask(&pred).map_err(|e| CommandError::at(&a.pred, e))?;
        let g = io::read_mask(&gt).map_err(|e| CommandError::at(&a.gt, e))?;
        let m = mask_metrics(&p, &g)?;
        let json = serde_json::json!({
            "accuracy": m.accuracy,
            "precision": m.precision,
            "tpr": m.true_positive_rate,
            "mismatches": m.mismatch_count,
            "total": m.total,
            "accuracy_undefined": m.accuracy_undefined,
            "precision_undefined": m.precision_undefined,
            "tpr_undefined": m.tpr_undefined,
        });
        (m.summary_line(), json)
    } else {
        let p = io::read_depth(&pred).map_err(|e| CommandError::at(&a.pred, e))?;
        let g = io::read_depth(&gt).map_err(|e| CommandError::at(&a.gt, e))?;
        p.depth.ensure_same_dims(&g.depth)?;
        let (w, h) = p.dims();
        // Scored where both maps hold a depth.
        let valid = Grid::from_fn(w, h, |r, c| *p.known.get(r, c) && *g.known.get(r, c));
        let n = valid.as_slice().iter().filter(|v| **v).count();
        let rmse = depth_rmse(&p, &g, &valid)?;
        (format!("rmse={rmse:.6} pixels={n}"), serde_json::json!({ "rmse": rmse, "pixels": n }))
    };
    if let Some(path) = &a.json {
        let text = format!("{json}\n");
        fs::write(path, text).map_err(|e| CommandError::input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(line)
}

/// Parses `args`, runs the command and reports on stdout/stderr. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code
        }
    }
}
