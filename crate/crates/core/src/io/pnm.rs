//! Binary PGM (`P5`, maxval 255) and single-channel PFM (`Pf`, little-endian).

use crate::error::{Error, Result};
use crate::freespace::{FreeSpaceMask, Label};
use crate::raster::{grey_from_u8, grey_to_u8, DenseDepthMap, GreyImage, Grid};

/// PFM value written for pixels without a depth.
pub const UNKNOWN_DEPTH: f32 = -1.0;

pub const MASK_FREE: u8 = 255;
pub const MASK_OCCUPIED: u8 = 0;
pub const MASK_UNKNOWN: u8 = 128;

/// Splits a netpbm-style header into `fields` whitespace-separated tokens.
/// `#` starts a comment running to the end of the line. Exactly one
/// whitespace byte must follow the last token. Returns the tokens with the
/// line each started on, and the payload offset.
fn header_tokens(bytes: &[u8], fields: &[&str]) -> Result<(Vec<(String, usize)>, usize)> {
    let mut tokens = Vec::with_capacity(fields.len());
    let mut pos = 0;
    let mut line = 1;
    while tokens.len() < fields.len() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b'\n') => {
                    line += 1;
                    pos += 1;
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => {
                    return Err(Error::parse(
                        line,
                        format!("header ends before the {} field", fields[tokens.len()]),
                    ))
                }
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        let text = std::str::from_utf8(&bytes[start..pos])
            .map_err(|_| Error::parse(line, format!("{} field is not ASCII", fields[tokens.len()])))?;
        tokens.push((text.to_string(), line));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => Ok((tokens, pos + 1)),
        _ => Err(Error::parse(
            line,
            format!("missing separator after the {} field", fields[fields.len() - 1]),
        )),
    }
}

fn parse_dim(token: &(String, usize), field: &str) -> Result<usize> {
    match token.0.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::parse(
            token.1,
            format!("{field} field must be a positive integer, got {:?}", token.0),
        )),
    }
}

fn check_payload(len: usize, expected: usize, line: usize) -> Result<()> {
    if len < expected {
        return Err(Error::parse(
            line,
            format!("payload has {len} bytes, expected {expected}"),
        ));
    }
    if len > expected {
        return Err(Error::parse(
            line,
            format!("{} bytes of trailing data after the payload", len - expected),
        ));
    }
    Ok(())
}

pub fn write_pgm(width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    assert_eq!(samples.len(), width * height, "sample count");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

/// Returns `(width, height, samples)`.
pub fn read_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let fields = ["magic", "width", "height", "maxval"];
    let (t, offset) = header_tokens(bytes, &fields)?;
    if t[0].0 != "P5" {
        return Err(Error::parse(
            t[0].1,
            format!("magic field must be P5, got {:?}", t[0].0),
        ));
    }
    let width = parse_dim(&t[1], "width")?;
    let height = parse_dim(&t[2], "height")?;
    if t[3].0 != "255" {
        return Err(Error::parse(
            t[3].1,
            format!("maxval field must be 255, got {:?}", t[3].0),
        ));
    }
    check_payload(bytes.len() - offset, width * height, t[3].1)?;
    Ok((width, height, bytes[offset..].to_vec()))
}

/// Rows are stored bottom-to-top, as the format prescribes.
pub fn write_pfm(map: &Grid<f32>) -> Vec<u8> {
    let (w, h) = map.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for row in (0..h).rev() {
        for col in 0..w {
            out.extend_from_slice(&map.get(row, col).to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(bytes: &[u8]) -> Result<Grid<f32>> {
    let fields = ["magic", "width", "height", "scale"];
    let (t, offset) = header_tokens(bytes, &fields)?;
    if t[0].0 != "Pf" {
        return Err(Error::parse(
            t[0].1,
            format!("magic field must be Pf (single channel), got {:?}", t[0].0),
        ));
    }
    let width = parse_dim(&t[1], "width")?;
    let height = parse_dim(&t[2], "height")?;
    let scale: f64 = t[3]
        .0
        .parse()
        .map_err(|_| Error::parse(t[3].1, format!("scale field is not a number: {:?}", t[3].0)))?;
    if !(scale < 0.0) {
        return Err(Error::parse(
            t[3].1,
            format!("scale field must be negative (little-endian), got {:?}", t[3].0),
        ));
    }
    check_payload(bytes.len() - offset, width * height * 4, t[3].1)?;
    let payload = &bytes[offset..];
    let mut grid = Grid::filled(width, height, 0.0f32);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let row = height - 1 - i / width;
        let col = i % width;
        grid.set(row, col, f32::from_le_bytes(chunk.try_into().expect("4-byte chunk")));
    }
    Ok(grid)
}

pub fn write_grey(image: &GreyImage) -> Vec<u8> {
    write_pgm(image.width(), image.height(), &grey_to_u8(image))
}

pub fn read_grey(bytes: &[u8]) -> Result<GreyImage> {
    let (w, h, samples) = read_pgm(bytes)?;
    grey_from_u8(w, h, &samples)
}

pub fn label_to_byte(label: Label) -> u8 {
    match label {
        Label::Free => MASK_FREE,
        Label::Occupied => MASK_OCCUPIED,
        Label::Unknown => MASK_UNKNOWN,
    }
}

pub fn byte_to_label(b: u8) -> Option<Label> {
    match b {
        MASK_FREE => Some(Label::Free),
        MASK_OCCUPIED => Some(Label::Occupied),
        MASK_UNKNOWN => Some(Label::Unknown),
        _ => None,
    }
}

pub fn write_mask(mask: &FreeSpaceMask) -> Vec<u8> {
    let bytes: Vec<u8> = mask.as_slice().iter().map(|l| label_to_byte(*l)).collect();
    write_pgm(mask.width(), mask.height(), &bytes)
}

/// Mask PGMs may only contain the three label levels.
pub fn read_mask(bytes: &[u8]) -> Result<FreeSpaceMask> {
    let (w, h, samples) = read_pgm(bytes)?;
    let labels = samples
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            byte_to_label(b).ok_or_else(|| {
                Error::parse(
                    4,
                    format!(
                        "mask sample {b} at row {}, col {} is not 0, 128 or 255",
                        i / w,
                        i % w
                    ),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Grid::from_vec(w, h, labels)
}

/// Depth as PFM with [`UNKNOWN_DEPTH`] for missing pixels.
pub fn write_depth(depth: &DenseDepthMap) -> Vec<u8> {
    let (w, h) = depth.dims();
    write_pfm(&Grid::from_fn(w, h, |r, c| {
        depth.value(r, c).map_or(UNKNOWN_DEPTH, |d| d as f32)
    }))
}

/// Negative values (the sentinel) read back as unknown.
pub fn read_depth(bytes: &[u8]) -> Result<DenseDepthMap> {
    let grid = read_pfm(bytes)?;
    let (w, h) = grid.dims();
    let mut out = DenseDepthMap::unknown(w, h);
    for (r, c, v) in grid.indexed() {
        if v.is_finite() && *v >= 0.0 {
            out.set(r, c, Some(*v as f64));
        }
    }
    Ok(out)
}

pub fn write_f64_map(map: &Grid<f64>) -> Vec<u8> {
    write_pfm(&map.map(|v| *v as f32))
}

pub fn read_f64_map(bytes: &[u8]) -> Result<Grid<f64>> {
    Ok(read_pfm(bytes)?.map(|v| *v as f64))
}

/// Support flags as PGM: 255 known, 0 unknown.
pub fn write_known(known: &Grid<bool>) -> Vec<u8> {
    let bytes: Vec<u8> = known.as_slice().iter().map(|&k| if k { 255 } else { 0 }).collect();
    write_pgm(known.width(), known.height(), &bytes)
}
