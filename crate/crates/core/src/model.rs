//! Model constants, the unattractiveness `u` and the saturation `M`, plus the
//! named validation rules every data constraint maps to.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, GridField};
use crate::spectral::SpectralError;

/// One named rule per numeric data constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationRule {
    DeltaPositive,
    UMinusPositive,
    UMinusBelowUPlus,
    UPlusBelowOne,
    RhoTildePositive,
    KappaInUnitInterval,
    EtaNonnegative,
    OmegaNonnegative,
    GammaNonnegative,
    KernelNonnegative,
    KernelRowNormalization,
    InitialDensityPositive,
}

impl ValidationRule {
    pub const ALL: [ValidationRule; 12] = [
        Self::DeltaPositive,
        Self::UMinusPositive,
        Self::UMinusBelowUPlus,
        Self::UPlusBelowOne,
        Self::RhoTildePositive,
        Self::KappaInUnitInterval,
        Self::EtaNonnegative,
        Self::OmegaNonnegative,
        Self::GammaNonnegative,
        Self::KernelNonnegative,
        Self::KernelRowNormalization,
        Self::InitialDensityPositive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::DeltaPositive => "delta-positive",
            Self::UMinusPositive => "u-minus-positive",
            Self::UMinusBelowUPlus => "u-minus-below-u-plus",
            Self::UPlusBelowOne => "u-plus-below-one",
            Self::RhoTildePositive => "rho-tilde-positive",
            Self::KappaInUnitInterval => "kappa-in-unit-interval",
            Self::EtaNonnegative => "eta-nonnegative",
            Self::OmegaNonnegative => "omega-nonnegative",
            Self::GammaNonnegative => "gamma-nonnegative",
            Self::KernelNonnegative => "kernel-nonnegative",
            Self::KernelRowNormalization => "kernel-row-normalization",
            Self::InitialDensityPositive => "initial-density-positive",
        }
    }

    /// Name of the quantity the rule constrains.
    pub fn subject(self) -> &'static str {
        match self {
            Self::DeltaPositive => "delta",
            Self::UMinusPositive | Self::UMinusBelowUPlus => "u_minus",
            Self::UPlusBelowOne => "u_plus",
            Self::RhoTildePositive => "rho_tilde",
            Self::KappaInUnitInterval => "kappa",
            Self::EtaNonnegative => "eta",
            Self::OmegaNonnegative => "omega",
            Self::GammaNonnegative => "gamma",
            Self::KernelNonnegative | Self::KernelRowNormalization => "tau",
            Self::InitialDensityPositive => "rho0",
        }
    }
}

impl fmt::Display for ValidationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{} violates {rule}: {detail}", rule.subject())]
    Constraint {
        rule: ValidationRule,
        detail: String,
    },
    #[error("positivity guard: min {field} = {min:e} is not positive")]
    Positivity { field: &'static str, min: f64 },
    #[error("kernel has {got} entries, grid requires {expected}")]
    KernelSize { expected: usize, got: usize },
    #[error("dense kernels are limited to {limit} grid points, grid has {points}")]
    DenseTooLarge { points: usize, limit: usize },
    #[error("model fields live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub(crate) fn violation(rule: ValidationRule, detail: impl Into<String>) -> ModelError {
    ModelError::Constraint {
        rule,
        detail: detail.into(),
    }
}

/// Constants `delta`, `u+`, `u-`, `rho~`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    delta: f64,
    u_plus: f64,
    u_minus: f64,
    rho_tilde: f64,
}

impl ModelParams {
    /// Requires `delta > 0`, `0 < u- < u+ < 1`, `rho~ > 0`.
    pub fn new(delta: f64, u_plus: f64, u_minus: f64, rho_tilde: f64) -> Result<Self, ModelError> {
        use ValidationRule::*;
        // NaN fails every comparison below
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(violation(DeltaPositive, format!("delta = {delta}, need delta > 0")));
        }
        if !(u_minus > 0.0) {
            return Err(violation(UMinusPositive, format!("u_minus = {u_minus}, need u_minus > 0")));
        }
        if !(u_minus < u_plus) {
            return Err(violation(
                UMinusBelowUPlus,
                format!("u_minus = {u_minus}, u_plus = {u_plus}, need u_minus < u_plus"),
            ));
        }
        if !(u_plus < 1.0) {
            return Err(violation(UPlusBelowOne, format!("u_plus = {u_plus}, need u_plus < 1")));
        }
        if !(rho_tilde > 0.0 && rho_tilde.is_finite()) {
            return Err(violation(
                RhoTildePositive,
                format!("rho_tilde = {rho_tilde}, need rho_tilde > 0"),
            ));
        }
        Ok(Self {
            delta,
            u_plus,
            u_minus,
            rho_tilde,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn u_plus(&self) -> f64 {
        self.u_plus
    }

    pub fn u_minus(&self) -> f64 {
        self.u_minus
    }

    pub fn rho_tilde(&self) -> f64 {
        self.rho_tilde
    }

    /// `u = u+ - kappa u- / (1 + rho/rho~)`.
    pub fn unattractiveness(&self, kappa: f64, rho: f64) -> f64 {
        self.u_plus - kappa * self.u_minus / (1.0 + rho / self.rho_tilde)
    }

    pub fn unattractiveness_field(
        &self,
        kappa: &GridField,
        rho: &GridField,
    ) -> Result<GridField, GridError> {
        kappa.zip_with(rho, |k, r| self.unattractiveness(k, r))
    }

    /// `M(rho) = u- rho / (1 + rho/rho~)`, so that `rho u = u+ rho - kappa M(rho)`.
    pub fn saturation(&self, rho: f64) -> f64 {
        self.u_minus * rho / (1.0 + rho / self.rho_tilde)
    }

    pub fn saturation_prime(&self, rho: f64) -> f64 {
        let s = 1.0 + rho / self.rho_tilde;
        self.u_minus / (s * s)
    }

    pub fn saturation_second(&self, rho: f64) -> f64 {
        let s = 1.0 + rho / self.rho_tilde;
        -2.0 * self.u_minus / (self.rho_tilde * s * s * s)
    }

    pub fn saturation_third(&self, rho: f64) -> f64 {
        let s = 1.0 + rho / self.rho_tilde;
        6.0 * self.u_minus / (self.rho_tilde * self.rho_tilde * s.powi(4))
    }
}
