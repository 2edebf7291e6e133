//! Transfer kernels `tau(y, x)` and the nonlocal operator
//! `I[q](x) = int tau(y, x) q(y) dy`, both by the rectangle rule.
//!
//! A kernel is normalized when `int tau(y, x) dx = 1` for every source `y`.
//! [`TransferKernel`] values are always normalized.

use crate::grid::{GridField, TorusGrid};
use crate::model::{violation, ModelError, ValidationRule};

/// Dense kernels are capped at this many grid points (`n^d`).
pub const DENSE_POINT_LIMIT: usize = 4096;

/// Row integrals must match 1 this closely for a kernel to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Kernel as supplied, before normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum RawKernel {
    /// `tau(y, x) = c`.
    Uniform(f64),
    /// `tau(y, x) = source(y) * target(x)`.
    Separable { source: GridField, target: GridField },
    /// Row-major in `(y, x)`: entry `y * N + x`.
    Dense { grid: TorusGrid, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Uniform,
    /// Normalized separable kernels no longer depend on `y`.
    Profile(Vec<f64>),
    Dense(Vec<f64>),
}

/// A nonnegative, row-normalized transfer kernel on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferKernel {
    grid: TorusGrid,
    repr: Repr,
}

fn row_integrals_dense(n: usize, values: &[f64]) -> Vec<f64> {
    values
        .chunks(n)
        .map(|row| row.iter().sum::<f64>() / n as f64)
        .collect()
}

fn check_nonnegative(values: &[f64]) -> Result<(), ModelError> {
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(violation(
            ValidationRule::KernelNonnegative,
            format!("entry {i} = {v}, need tau >= 0"),
        ));
    }
    Ok(())
}

fn check_dense_size(grid: &TorusGrid, len: usize) -> Result<(), ModelError> {
    let points = grid.len();
    if points > DENSE_POINT_LIMIT {
        return Err(ModelError::DenseTooLarge {
            points,
            limit: DENSE_POINT_LIMIT,
        });
    }
    if len != points * points {
        return Err(ModelError::KernelSize {
            expected: points * points,
            got: len,
        });
    }
    Ok(())
}

/// Divides every `y`-slice by its integral over `x`.
pub fn kernel_normalize(raw: &RawKernel, grid: TorusGrid) -> Result<TransferKernel, ModelError> {
    let zero_row = |row: usize, integral: f64| {
        violation(
            ValidationRule::KernelRowNormalization,
            format!("row {row} integrates to {integral:e}, cannot normalize"),
        )
    };
    let repr = match raw {
        RawKernel::Uniform(c) => {
            check_nonnegative(&[*c])?;
            if *c <= 0.0 {
                return Err(zero_row(0, *c));
            }
            Repr::Uniform
        }
        RawKernel::Separable { source, target } => {
            if *source.grid() != grid || *target.grid() != grid {
                return Err(ModelError::GridMismatch);
            }
            check_nonnegative(source.values())?;
            check_nonnegative(target.values())?;
            let mass = target.integral();
            if let Some((row, s)) = source
                .values()
                .iter()
                .enumerate()
                .find(|(_, s)| **s * mass <= 0.0)
            {
                return Err(zero_row(row, s * mass));
            }
            Repr::Profile(target.values().iter().map(|b| b / mass).collect())
        }
        RawKernel::Dense { grid: g, values } => {
            if *g != grid {
                return Err(ModelError::GridMismatch);
            }
            check_dense_size(&grid, values.len())?;
            check_nonnegative(values)?;
            let n = grid.len();
            let rows = row_integrals_dense(n, values);
            if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| **r <= 0.0) {
                return Err(zero_row(row, *r));
            }
            let mut out = values.clone();
            for (chunk, r) in out.chunks_mut(n).zip(&rows) {
                for v in chunk {
                    *v /= r;
                }
            }
            Repr::Dense(out)
        }
    };
    Ok(TransferKernel { grid, repr })
}

impl TransferKernel {
    pub fn uniform(grid: TorusGrid) -> Self {
        Self {
            grid,
            repr: Repr::Uniform,
        }
    }

    /// Accepts a kernel only if it is already normalized to [`NORMALIZATION_TOL`].
    pub fn from_normalized(raw: &RawKernel, grid: TorusGrid) -> Result<Self, ModelError> {
        let kernel = Self {
            grid,
            repr: match raw {
                RawKernel::Uniform(c) => {
                    check_nonnegative(&[*c])?;
                    if (c - 1.0).abs() > NORMALIZATION_TOL {
                        return Err(violation(
                            ValidationRule::KernelRowNormalization,
                            format!("uniform kernel value {c} is not 1"),
                        ));
                    }
                    Repr::Uniform
                }
                RawKernel::Separable { source, target } => {
                    if *source.grid() != grid || *target.grid() != grid {
                        return Err(ModelError::GridMismatch);
                    }
                    check_nonnegative(source.values())?;
                    check_nonnegative(target.values())?;
                    let mass = target.integral();
                    if let Some((row, s)) = source
                        .values()
                        .iter()
                        .enumerate()
                        .find(|(_, s)| (**s * mass - 1.0).abs() > NORMALIZATION_TOL)
                    {
                        return Err(violation(
                            ValidationRule::KernelRowNormalization,
                            format!("row {row} integrates to {}", s * mass),
                        ));
                    }
                    Repr::Profile(target.values().iter().map(|b| b / mass).collect())
                }
                RawKernel::Dense { grid: g, values } => {
                    if *g != grid {
                        return Err(ModelError::GridMismatch);
                    }
                    check_dense_size(&grid, values.len())?;
                    check_nonnegative(values)?;
                    Repr::Dense(values.clone())
                }
            },
        };
        if let Some((row, r)) = kernel
            .row_integrals()
            .iter()
            .enumerate()
            .find(|(_, r)| (**r - 1.0).abs() > NORMALIZATION_TOL)
        {
            return Err(violation(
                ValidationRule::KernelRowNormalization,
                format!("row {row} integrates to {r}"),
            ));
        }
        Ok(kernel)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// `tau(y, x)` at grid indices.
    pub fn value(&self, y: usize, x: usize) -> f64 {
        match &self.repr {
            Repr::Uniform => 1.0,
            Repr::Profile(p) => p[x],
            Repr::Dense(v) => v[y * self.grid.len() + x],
        }
    }

    /// `int tau(y, x) dx` for every source point `y`.
    pub fn row_integrals(&self) -> Vec<f64> {
        let n = self.grid.len();
        match &self.repr {
            Repr::Uniform => vec![1.0; n],
            Repr::Profile(p) => vec![p.iter().sum::<f64>() / n as f64; n],
            Repr::Dense(v) => row_integrals_dense(n, v),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }
}

/// `I[q](x) = sum_y tau(y, x) q(y) / N`.
pub fn nonlocal_transfer(q: &GridField, tau: &TransferKernel) -> Result<GridField, ModelError> {
    if *q.grid() != tau.grid {
        return Err(ModelError::GridMismatch);
    }
    let values = match &tau.repr {
        Repr::Uniform => vec![q.integral(); q.values().len()],
        Repr::Profile(p) => {
            let total = q.integral();
            p.iter().map(|b| b * total).collect()
        }
        Repr::Dense(v) => {
            let n = q.values().len();
            let mut out = vec![0.0; n];
            for (row, &qy) in v.chunks(n).zip(q.values()) {
                if qy == 0.0 {
                    continue;
                }
                for (o, t) in out.iter_mut().zip(row) {
                    *o += t * qy;
                }
            }
            let scale = 1.0 / n as f64;
            out.iter_mut().for_each(|o| *o *= scale);
            out
        }
    };
    Ok(GridField::from_parts(tau.grid, values))
}
