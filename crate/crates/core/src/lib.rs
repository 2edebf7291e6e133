//! Pseudospectral simulation and verification of a nonlocal, nonlinear
//! parabolic equation on the flat torus.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod analysis;
mod fft;
pub mod grid;
pub mod integrator;
pub mod kernel;
pub mod model;
pub mod rhs;
pub mod scenario;
pub mod spectral;

pub use grid::{GridField, TorusGrid};
pub use kernel::{RawKernel, TransferKernel};
pub use model::{ModelError, ModelParams, ValidationRule};
pub use rhs::ModelData;
pub use spectral::SpectralField;
