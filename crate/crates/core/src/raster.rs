//! Core raster containers and principal-value phase arithmetic.
//!
//! A [`Grid`] is a row-major 2-D raster of `f64` values with a unit tag; a
//! [`Mask`] marks which pixels of a companion grid are valid. Grids are
//! treated as immutable once built, so all processing stages are pure and
//! reentrant. Origin is top-left, `x` is the column, `y` is the row.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod fphm;
pub mod pgm;

/// Physical unit carried by a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Intensity,
    Radians,
    Millimeters,
    Dimensionless,
}

/// Row-major 2-D raster of real values.
///
/// NaN is permitted only at pixels a companion [`Mask`] marks invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    unit: Unit,
    values: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, unit: Unit, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let expected = width * height;
        if values.len() != expected {
            return Err(Error::ValueCountMismatch {
                width,
                height,
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            width,
            height,
            unit,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, unit: Unit, value: f64) -> Result<Self> {
        Self::new(width, height, unit, vec![value; width * height])
    }

    /// Build a grid by evaluating `f(x, y)` at every pixel.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(
        width: usize,
        height: usize,
        unit: Unit,
        mut f: F,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, unit, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[self.idx(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        let i = self.idx(x, y);
        self.values[i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Same raster re-tagged with a different unit (no value change).
    pub fn retag(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    /// New grid with the same dimensions, values transformed pixelwise.
    pub fn map<F: FnMut(f64) -> f64>(&self, unit: Unit, mut f: F) -> Self {
        Self {
            width: self.width,
            height: self.height,
            unit,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_dims(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_same_dims(&self, other: &Grid) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }
}

/// Boolean validity raster qualifying a [`Grid`] of the same dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    valid: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, valid: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let expected = width * height;
        if valid.len() != expected {
            return Err(Error::ValueCountMismatch {
                width,
                height,
                expected,
                got: valid.len(),
            });
        }
        Ok(Self {
            width,
            height,
            valid,
        })
    }

    pub fn all_valid(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.valid[self.idx(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, valid: bool) {
        let i = self.idx(x, y);
        self.valid[i] = valid;
    }

    pub fn values(&self) -> &[bool] {
        &self.valid
    }

    pub fn count_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn same_dims_grid(&self, grid: &Grid) -> bool {
        self.width == grid.width() && self.height == grid.height()
    }

    pub fn check_same_dims_grid(&self, grid: &Grid) -> Result<()> {
        if self.same_dims_grid(grid) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: grid.width(),
                right_height: grid.height(),
            })
        }
    }

    /// Pixelwise AND of two masks.
    pub fn intersect(&self, other: &Mask) -> Result<Mask> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        let valid = self
            .valid
            .iter()
            .zip(&other.valid)
            .map(|(&a, &b)| a && b)
            .collect();
        Mask::new(self.width, self.height, valid)
    }
}

/// Wrap a finite phase into the principal interval `(-pi, pi]`.
///
/// The boundary is assigned to `+pi`, matching the two-argument arctangent
/// convention used by demodulation, so the wrap is total on finite inputs.
pub fn wrap_to_principal(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::NonFinitePhase);
    }
    Ok(wrap_unchecked(theta))
}

/// Wrap without the finiteness check. Callers must pass finite values.
#[inline]
pub(crate) fn wrap_unchecked(theta: f64) -> f64 {
    debug_assert!(theta.is_finite());
    // fmod is exact, so the only rounding comes from the final adjustment.
    let mut r = theta % TAU;
    if r > PI {
        r -= TAU;
    } else if r <= -PI {
        r += TAU;
    }
    r
}
