//! Row-major image containers shared by every stage of the pipeline.

use crate::error::{Error, Result};

/// Dense row-major raster. Row 0 is the first stored row.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "raster of {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (i / w, i % w, v))
    }

    pub fn ensure_same_dims<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: other.dims(),
            });
        }
        Ok(())
    }
}

/// Grey-level image with intensities normalized to `[0, 1]`.
pub type GreyImage = Grid<f64>;

/// Image-gridded depth with optional values (meters of ground-plane distance).
pub type SparseDepthMap = Grid<Option<f64>>;

/// Per-pixel variance in squared meters.
pub type UncertaintyMap = Grid<f64>;

/// Depth map where every pixel carries a value and a support flag.
///
/// Pixels without support hold `f64::NAN` in `depth` and `false` in `known`.
#[derive(Debug, Clone)]
pub struct DenseDepthMap {
    pub depth: Grid<f64>,
    pub known: Grid<bool>,
}

/// Equal when the same pixels are known and carry bit-identical depths.
impl PartialEq for DenseDepthMap {
    fn eq(&self, other: &Self) -> bool {
        self.known == other.known
            && self
                .depth
                .as_slice()
                .iter()
                .zip(other.depth.as_slice())
                .zip(self.known.as_slice())
                .all(|((a, b), k)| !k || a.to_bits() == b.to_bits())
    }
}

impl DenseDepthMap {
    pub fn unknown(width: usize, height: usize) -> Self {
        Self {
            depth: Grid::filled(width, height, f64::NAN),
            known: Grid::filled(width, height, false),
        }
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }

    /// Returns the depth at a pixel if it is known.
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        if *self.known.get(row, col) {
            Some(*self.depth.get(row, col))
        } else {
            None
        }
    }

    pub fn set(&mut self, row: usize, col: usize, value: Option<f64>) {
        match value {
            Some(v) => {
                self.depth.set(row, col, v);
                self.known.set(row, col, true);
            }
            None => {
                self.depth.set(row, col, f64::NAN);
                self.known.set(row, col, false);
            }
        }
    }

    pub fn from_sparse(sparse: &SparseDepthMap) -> Self {
        let mut out = Self::unknown(sparse.width(), sparse.height());
        for (r, c, v) in sparse.indexed() {
            out.set(r, c, *v);
        }
        out
    }

    pub fn to_sparse(&self) -> SparseDepthMap {
        Grid::from_fn(self.width(), self.height(), |r, c| self.value(r, c))
    }
}

/// Converts 8-bit samples to normalized intensities.
pub fn grey_from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<GreyImage> {
    Grid::from_vec(width, height, bytes.iter().map(|&b| b as f64 / 255.0).collect())
}

/// Quantizes normalized intensities to 8-bit samples (round half up, clamped).
pub fn grey_to_u8(image: &GreyImage) -> Vec<u8> {
    image
        .as_slice()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8)
        .collect()
}
