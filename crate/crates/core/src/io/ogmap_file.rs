//! Occupancy grids on disk: a PGM with forward (+x) pointing up the image,
//! a `key=value` header sidecar describing the cell layout, and an optional
//! PFM of per-cell confidence in the same orientation.

use crate::error::{Error, Result};
use crate::freespace::{GridGeometry, OgMap};
use crate::io::config::ConfigDocument;
use crate::io::pnm::{byte_to_label, label_to_byte, read_pfm, read_pgm, write_pfm, write_pgm};
use crate::raster::Grid;

/// Image row `r` holds grid row `ix = rows - 1 - r`; image column is `iy`.
fn image_row(geometry: &GridGeometry, ix: usize) -> usize {
    geometry.rows() - 1 - ix
}

pub fn write_ogmap_pgm(map: &OgMap) -> Vec<u8> {
    let (rows, cols) = (map.geometry.rows(), map.geometry.cols());
    let mut bytes = vec![0u8; rows * cols];
    for ix in 0..rows {
        let r = image_row(&map.geometry, ix);
        for iy in 0..cols {
            bytes[r * cols + iy] = label_to_byte(map.get(ix, iy));
        }
    }
    write_pgm(cols, rows, &bytes)
}

pub fn write_ogmap_header(geometry: &GridGeometry) -> String {
    let (origin_ix, origin_iy) = geometry.origin_cell();
    format!(
        "cell_size={}\nextent_x={}\nextent_y={}\nrows={}\ncols={}\norigin_row={}\norigin_col={}\n",
        geometry.cell_size,
        geometry.extent_x,
        geometry.extent_y,
        geometry.rows(),
        geometry.cols(),
        image_row(geometry, origin_ix),
        origin_iy
    )
}

pub fn read_ogmap_header(text: &str) -> Result<GridGeometry> {
    let doc = ConfigDocument::parse(text, &[])?;
    let mut values = [None; 3];
    for e in doc.entries_for("") {
        let slot = match e.key.as_str() {
            "cell_size" => 0,
            "extent_x" => 1,
            "extent_y" => 2,
            "rows" | "cols" | "origin_row" | "origin_col" => continue,
            other => return Err(Error::parse(e.line, format!("unknown key {other:?} in grid header"))),
        };
        values[slot] = Some(
            e.value
                .parse::<f64>()
                .map_err(|_| Error::parse(e.line, format!("{} must be a number", e.key)))?,
        );
    }
    let missing = |i: usize, name: &str| values[i].ok_or_else(|| Error::parse(0, format!("grid header lacks {name}")));
    let geometry = GridGeometry {
        cell_size: missing(0, "cell_size")?,
        extent_x: missing(1, "extent_x")?,
        extent_y: missing(2, "extent_y")?,
    };
    geometry.validate()?;
    Ok(geometry)
}

/// Rebuilds a map from its PGM and header. Known cells get confidence 1
/// unless a confidence raster is supplied.
pub fn read_ogmap(pgm: &[u8], header: &str, confidence_pfm: Option<&[u8]>) -> Result<OgMap> {
    let geometry = read_ogmap_header(header)?;
    let (w, h, bytes) = read_pgm(pgm)?;
    let (rows, cols) = (geometry.rows(), geometry.cols());
    if (w, h) != (cols, rows) {
        return Err(Error::DimensionMismatch {
            expected: (cols, rows),
            got: (w, h),
        });
    }
    let confidence = confidence_pfm.map(read_pfm).transpose()?;
    if let Some(c) = &confidence {
        if c.dims() != (cols, rows) {
            return Err(Error::DimensionMismatch {
                expected: (cols, rows),
                got: c.dims(),
            });
        }
    }
    let mut map = OgMap::unknown(geometry);
    for ix in 0..rows {
        let r = image_row(&geometry, ix);
        for iy in 0..cols {
            let b = bytes[r * cols + iy];
            let label = byte_to_label(b)
                .ok_or_else(|| Error::parse(0, format!("grid cell byte {b} is not 0, 128 or 255")))?;
            let conf = confidence.as_ref().map_or(1.0, |c| *c.get(r, iy) as f64);
            map.set(ix, iy, label, conf);
        }
    }
    Ok(map)
}

pub fn write_ogmap_confidence(map: &OgMap) -> Vec<u8> {
    let (rows, cols) = (map.geometry.rows(), map.geometry.cols());
    let grid = Grid::from_fn(cols, rows, |r, iy| *map.confidence.get(rows - 1 - r, iy) as f32);
    write_pfm(&grid)
}
