//! Uniform grids on the unit torus `[0,1)^d` and real point-value fields.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest dimension the grid accepts. Only `d <= 2` is exercised.
pub const MAX_DIM: usize = 3;

/// Smallest admissible number of points per dimension.
pub const MIN_POINTS: usize = 8;

/// Cap on `n^d`; keeps a malformed scenario from requesting absurd memory.
pub const MAX_POINTS: usize = 1 << 22;

/// Integer lattice wavevector; entries past `dim` are zero.
pub type Wavevector = [i64; MAX_DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1..={MAX_DIM}, got {0}")]
    InvalidDimension(usize),
    #[error("points per dimension must be a power of two >= {MIN_POINTS}, got {0}")]
    InvalidSize(usize),
    #[error("grid of {n}^{dim} points exceeds the cap of {MAX_POINTS}")]
    TooLarge { dim: usize, n: usize },
    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at grid index {0}")]
    NonFinite(usize),
    #[error("field has no values")]
    Empty,
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Uniform grid with `n` points per dimension on the unit-volume torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self, GridError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GridError::InvalidDimension(dim));
        }
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(GridError::InvalidSize(n));
        }
        if !n.checked_pow(dim as u32).is_some_and(|p| p <= MAX_POINTS) {
            return Err(GridError::TooLarge { dim, n });
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest representable wavenumber magnitude per axis (`n/2`).
    pub fn nyquist(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Row-major multi-index of a flat index; the last axis varies fastest.
    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi[..self.dim]
            .iter()
            .fold(0, |acc, &j| acc * self.n + (j % self.n))
    }

    /// Coordinates `x_j = j/n` of a grid point.
    pub fn point(&self, idx: usize) -> [f64; MAX_DIM] {
        let multi = self.multi_index(idx);
        let h = self.spacing();
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = multi[axis] as f64 * h;
        }
        x
    }

    /// Signed wavevector stored at a flat coefficient index (FFT ordering,
    /// components in `-n/2..n/2`).
    pub fn wavevector(&self, idx: usize) -> Wavevector {
        let multi = self.multi_index(idx);
        let half = self.n / 2;
        let mut k = [0i64; MAX_DIM];
        for axis in 0..self.dim {
            let j = multi[axis];
            k[axis] = if j < half {
                j as i64
            } else {
                j as i64 - self.n as i64
            };
        }
        k
    }

    /// Flat coefficient index of a wavevector, if representable.
    pub fn coeff_index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let half = self.nyquist();
        let mut multi = [0usize; MAX_DIM];
        for (axis, &ki) in k.iter().enumerate() {
            if ki < -half || ki >= half {
                return None;
            }
            multi[axis] = ki.rem_euclid(self.n as i64) as usize;
        }
        Some(self.flat_index(&multi))
    }

    /// Flat index of `-k` (mod the lattice) for the wavevector at `idx`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let multi = self.multi_index(idx);
        let mut neg = [0usize; MAX_DIM];
        for axis in 0..self.dim {
            neg[axis] = (self.n - multi[axis]) % self.n;
        }
        self.flat_index(&neg)
    }
}

pub fn squared_norm(k: &Wavevector) -> f64 {
    k.iter().map(|&c| (c * c) as f64).sum()
}

/// Real point values on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Skips validation; callers guarantee length and finiteness.
    pub(crate) fn from_parts(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self::from_parts(grid, vec![c; grid.len()])
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self, GridError> {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| f(&grid.point(i)[..dim]))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Integral over the torus by the rectangle rule (the mean, since `|T^d| = 1`).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.values.len() as f64
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values).unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        min_value(&self.values).unwrap_or(f64::NAN)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        Self::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(
        &self,
        other: &GridField,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<GridField, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(Self::from_parts(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Rectangle-rule `L^2` inner product.
    pub fn dot(&self, other: &GridField) -> Result<f64, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / self.values.len() as f64)
    }
}

/// `max |f|` over the samples.
pub fn sup_norm(values: &[f64]) -> Result<f64, GridError> {
    if values.is_empty() {
        return Err(GridError::Empty);
    }
    Ok(values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// `min f` over the samples.
pub fn min_value(values: &[f64]) -> Result<f64, GridError> {
    if values.is_empty() {
        return Err(GridError::Empty);
    }
    Ok(values.iter().copied().fold(f64::INFINITY, f64::min))
}
