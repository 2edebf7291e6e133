//! Model data and the pseudospectral right-hand sides
//!
//! ```text
//! classical:    delta Lap(rho u) + eta - omega rho + I[gamma rho u] - gamma rho u
//! regularized:  delta J[Lap(u+ J rho - kappa M(J rho))] + eta - omega rho + I[gamma rho u] - gamma rho u
//! ```
//!
//! Nonlinear terms are formed pointwise on the grid. The reaction and nonlocal
//! terms always use the un-mollified density.

use crate::grid::{GridField, TorusGrid};
use crate::kernel::{nonlocal_transfer, TransferKernel};
use crate::model::{violation, ModelError, ModelParams, ValidationRule};
use crate::spectral::{
    dealias_two_thirds, derivative, forward_transform, gradient, inverse_transform, laplacian,
    mollify, SpectralField,
};

/// Coefficient fields, kernel and constants of the model on one grid.
#[derive(Debug, Clone)]
pub struct ModelData {
    grid: TorusGrid,
    params: ModelParams,
    kappa: GridField,
    eta: GridField,
    omega: GridField,
    gamma: GridField,
    tau: TransferKernel,
    dealias: bool,
    kappa_grad: Vec<GridField>,
    kappa_lap: GridField,
}

impl ModelData {
    /// Checks `0 <= kappa <= 1` and `eta, omega, gamma >= 0` pointwise.
    pub fn new(
        params: ModelParams,
        kappa: GridField,
        eta: GridField,
        omega: GridField,
        gamma: GridField,
        tau: TransferKernel,
    ) -> Result<Self, ModelError> {
        let grid = *kappa.grid();
        for g in [eta.grid(), omega.grid(), gamma.grid(), tau.grid()] {
            if *g != grid {
                return Err(ModelError::GridMismatch);
            }
        }
        let check = |field: &GridField, rule: ValidationRule, ok: fn(f64) -> bool, bound: &str| {
            match field.values().iter().enumerate().find(|(_, v)| !ok(**v)) {
                Some((i, v)) => Err(violation(
                    rule,
                    format!("value {v} at grid index {i} outside {bound}"),
                )),
                None => Ok(()),
            }
        };
        check(&kappa, ValidationRule::KappaInUnitInterval, |v| (0.0..=1.0).contains(&v), "[0, 1]")?;
        check(&eta, ValidationRule::EtaNonnegative, |v| v >= 0.0, "[0, inf)")?;
        check(&omega, ValidationRule::OmegaNonnegative, |v| v >= 0.0, "[0, inf)")?;
        check(&gamma, ValidationRule::GammaNonnegative, |v| v >= 0.0, "[0, inf)")?;

        let kappa_hat = forward_transform(&kappa);
        let kappa_grad = gradient(&kappa_hat)
            .iter()
            .map(inverse_transform)
            .collect::<Result<Vec<_>, _>>()?;
        let kappa_lap = inverse_transform(&laplacian(&kappa_hat))?;
        Ok(Self {
            grid,
            params,
            kappa,
            eta,
            omega,
            gamma,
            tau,
            dealias: false,
            kappa_grad,
            kappa_lap,
        })
    }

    /// Applies the 2/3 mask to the transforms of the nonlinear terms.
    pub fn with_dealiasing(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kappa(&self) -> &GridField {
        &self.kappa
    }

    pub fn eta(&self) -> &GridField {
        &self.eta
    }

    pub fn omega(&self) -> &GridField {
        &self.omega
    }

    pub fn gamma(&self) -> &GridField {
        &self.gamma
    }

    pub fn tau(&self) -> &TransferKernel {
        &self.tau
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    /// Grid sups of all derivatives of order `<= m` of the coefficient fields.
    pub fn data_bound(&self, m: u32) -> Result<f64, ModelError> {
        let dim = self.grid.dim();
        let mut bound = 0.0_f64;
        for field in [&self.kappa, &self.eta, &self.omega, &self.gamma] {
            let hat = forward_transform(field);
            for alpha in multi_indices(dim, m) {
                let d = inverse_transform(&derivative(&hat, &alpha)?)?;
                bound = bound.max(d.sup_norm());
            }
        }
        Ok(bound)
    }

    fn transform_nonlinear(&self, f: &GridField) -> SpectralField {
        let hat = forward_transform(f);
        if self.dealias {
            dealias_two_thirds(&hat)
        } else {
            hat
        }
    }
}

/// Every multi-index of length `dim` with total order `<= m`.
pub(crate) fn multi_indices(dim: usize, m: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u32>| {
                let used: u32 = prefix.iter().sum();
                (0..=(m - used)).map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}

fn require_positive(field: &GridField, name: &'static str) -> Result<(), ModelError> {
    let min = field.min_value();
    if min > 0.0 {
        Ok(())
    } else {
        Err(ModelError::Positivity { field: name, min })
    }
}

/// `gamma rho u` and `I[gamma rho u]` for the un-mollified density.
pub fn exchange_terms(rho: &GridField, data: &ModelData) -> Result<(GridField, GridField), ModelError> {
    let p = data.params;
    let q = GridField::from_parts(
        data.grid,
        rho.values()
            .iter()
            .zip(data.kappa.values())
            .zip(data.gamma.values())
            .map(|((&r, &k), &g)| g * r * p.unattractiveness(k, r))
            .collect(),
    );
    let iq = nonlocal_transfer(&q, &data.tau)?;
    Ok((q, iq))
}

/// `eta - omega rho + I[gamma rho u] - gamma rho u` on the grid.
pub fn reaction_terms(rho: &GridField, data: &ModelData) -> Result<GridField, ModelError> {
    let (q, iq) = exchange_terms(rho, data)?;
    let values = rho
        .values()
        .iter()
        .zip(data.eta.values())
        .zip(data.omega.values())
        .zip(q.values().iter().zip(iq.values()))
        .map(|(((&r, &e), &w), (&q, &i))| e - w * r + (i - q))
        .collect();
    Ok(GridField::from_parts(data.grid, values))
}

/// `Lap(rho u)` by forming `rho u` on the grid and differentiating spectrally.
pub fn flux_laplacian_direct(rho: &GridField, data: &ModelData) -> Result<SpectralField, ModelError> {
    let flux = data.params.unattractiveness_field(&data.kappa, rho)?;
    let flux = flux.zip_with(rho, |u, r| r * u)?;
    Ok(laplacian(&data.transform_nonlinear(&flux)))
}

/// `Lap(rho u)` from the product-rule expansion
/// `u+ Lap rho - Lap(kappa) M - 2 M' grad kappa . grad rho - kappa M' Lap rho - kappa M'' |grad rho|^2`.
pub fn flux_laplacian_expanded(rho: &SpectralField, data: &ModelData) -> Result<GridField, ModelError> {
    let p = data.params;
    let rho_grid = inverse_transform(rho)?;
    let lap_rho = inverse_transform(&laplacian(rho))?;
    let grad_rho = gradient(rho)
        .iter()
        .map(inverse_transform)
        .collect::<Result<Vec<_>, _>>()?;
    let n = rho_grid.values().len();
    let values = (0..n)
        .map(|i| {
            let r = rho_grid.values()[i];
            let k = data.kappa.values()[i];
            let lr = lap_rho.values()[i];
            let (mut gk_gr, mut gr2) = (0.0, 0.0);
            for (gk, gr) in data.kappa_grad.iter().zip(&grad_rho) {
                gk_gr += gk.values()[i] * gr.values()[i];
                gr2 += gr.values()[i] * gr.values()[i];
            }
            p.u_plus() * lr
                - data.kappa_lap.values()[i] * p.saturation(r)
                - 2.0 * p.saturation_prime(r) * gk_gr
                - k * p.saturation_prime(r) * lr
                - k * p.saturation_second(r) * gr2
        })
        .collect();
    Ok(GridField::from_parts(data.grid, values))
}

/// Classical right-hand side with the direct flux Laplacian.
pub fn rhs_classical(rho: &SpectralField, data: &ModelData) -> Result<SpectralField, ModelError> {
    let rho_grid = inverse_transform(rho)?;
    require_positive(&rho_grid, "rho")?;
    let mut out = data.transform_nonlinear(&reaction_terms(&rho_grid, data)?);
    out.add_scaled(&flux_laplacian_direct(&rho_grid, data)?, data.params.delta())?;
    Ok(out)
}

/// Regularized right-hand side `A^eps[rho]`; `eps = 0` is the classical system
/// with the flux written as `u+ rho - kappa M(rho)`.
pub fn rhs_regularized(rho: &SpectralField, eps: f64, data: &ModelData) -> Result<SpectralField, ModelError> {
    let rho_grid = inverse_transform(rho)?;
    require_positive(&rho_grid, "rho")?;
    let smooth = mollify(rho, eps)?;
    let smooth_grid = if eps == 0.0 {
        rho_grid.clone()
    } else {
        inverse_transform(&smooth)?
    };
    require_positive(&smooth_grid, "mollified rho")?;

    let p = data.params;
    let inner = smooth_grid.zip_with(&data.kappa, |r, k| p.u_plus() * r - k * p.saturation(r))?;
    let diffusion = mollify(&laplacian(&data.transform_nonlinear(&inner)), eps)?;

    let mut out = data.transform_nonlinear(&reaction_terms(&rho_grid, data)?);
    out.add_scaled(&diffusion, p.delta())?;
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
        a.difference(b).unwrap().l2_norm() / a.l2_norm().max(b.l2_norm()).max(f64::MIN_POSITIVE)
    }

    fn constant_data(grid: TorusGrid, kappa: f64, gamma: f64) -> ModelData {
        ModelData::new(
            ModelParams::new(0.3, 0.9, 0.5, 1.0).unwrap(),
            GridField::constant(grid, kappa),
            GridField::constant(grid, 0.1),
            GridField::constant(grid, 0.05),
            GridField::constant(grid, gamma),
            TransferKernel::uniform(grid),
        )
        .unwrap()
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        // delta must be positive, so the zero-flux limit uses kappa = 0 with a constant rho
        let grid = TorusGrid::new(1, 16).unwrap();
        let data = ModelData::new(
            ModelParams::new(1e-300, 0.5, 0.1, 1.0).unwrap(),
            GridField::constant(grid, 0.0),
            GridField::constant(grid, 0.0),
            GridField::constant(grid, 0.0),
            GridField::constant(grid, 0.0),
            TransferKernel::uniform(grid),
        )
        .unwrap();
        let rho = forward_transform(&GridField::from_fn(grid, |x| 1.0 + 0.1 * (2.0 * std::f64::consts::PI * x[0]).cos()).unwrap());
        let r = rhs_classical(&rho, &data).unwrap();
        assert!(r.l2_norm() < 1e-290);
    }

    #[test]
    fn constant_steady_state_has_zero_rhs() {
        let grid = TorusGrid::new(1, 32).unwrap();
        for (kappa, gamma) in [(0.0, 0.0), (0.7, 0.4), (1.0, 2.0)] {
            let data = constant_data(grid, kappa, gamma);
            let rho = forward_transform(&GridField::constant(grid, 2.0));
            // FFT roundoff of a constant field, amplified by the Laplacian symbol
            assert!(rhs_classical(&rho, &data).unwrap().l2_norm() < 1e-12);
            for eps in [0.0, 0.01, 0.5] {
                assert!(rhs_regularized(&rho, eps, &data).unwrap().l2_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn positivity_guard() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let data = constant_data(grid, 0.5, 0.5);
        let rho = forward_transform(&GridField::from_fn(grid, |x| (2.0 * std::f64::consts::PI * x[0]).cos()).unwrap());
        assert!(matches!(
            rhs_classical(&rho, &data),
            Err(ModelError::Positivity { field: "rho", .. })
        ));
        assert!(matches!(
            rhs_regularized(&rho, 0.1, &data),
            Err(ModelError::Positivity { .. })
        ));
    }

    #[test]
    fn regularized_at_zero_matches_classical() {
        let grid = TorusGrid::new(1, 64).unwrap();
        for seed in 0..10 {
            let (data, rho) = random_scenario(grid, seed, seed % 2 == 0);
            let rho = forward_transform(&rho);
            let a = rhs_classical(&rho, &data).unwrap();
            let b = rhs_regularized(&rho, 0.0, &data).unwrap();
            assert!(rel(&a, &b) < 1e-12, "seed {seed}: {}", rel(&a, &b));
        }
    }

    #[test]
    fn direct_and_expanded_flux_laplacians_agree() {
        for grid in [TorusGrid::new(1, 256).unwrap(), TorusGrid::new(2, 128).unwrap()] {
            for seed in 0..10 {
                let (data, rho) = random_scenario(grid, 100 + seed, false);
                let direct = inverse_transform(&flux_laplacian_direct(&rho, &data).unwrap()).unwrap();
                let expanded = flux_laplacian_expanded(&forward_transform(&rho), &data).unwrap();
                let diff = direct.zip_with(&expanded, |a, b| a - b).unwrap().l2_norm();
                assert!(diff <= 1e-8 * direct.l2_norm(), "{grid:?} seed {seed}: {diff:e}");
            }
        }
    }

    #[test]
    fn mollified_rhs_approaches_classical_along_ladder() {
        let grid = TorusGrid::new(1, 128).unwrap();
        for seed in 0..5 {
            let (data, rho) = random_scenario(grid, 200 + seed, false);
            let rho = forward_transform(&rho);
            let base = rhs_classical(&rho, &data).unwrap();
            let gaps: Vec<f64> = [0.1, 0.05, 0.025]
                .iter()
                .map(|&e| rhs_regularized(&rho, e, &data).unwrap().difference(&base).unwrap().l2_norm())
                .collect();
            assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        }
    }

    #[test]
    fn nonlocal_exchange_integrates_to_zero() {
        let grid = TorusGrid::new(2, 16).unwrap();
        for seed in 0..6 {
            let (data, rho) = random_scenario(grid, 300 + seed, seed % 2 == 1);
            let (q, iq) = exchange_terms(&rho, &data).unwrap();
            let imbalance = iq.integral() - q.integral();
            assert!(imbalance.abs() <= 1e-10 * q.l1_norm());
        }
    }

    #[test]
    fn rhs_mean_is_source_minus_sink() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let (data, rho) = random_scenario(grid, 7, true);
        let r = rhs_regularized(&forward_transform(&rho), 0.05, &data).unwrap();
        let expected = data.eta().integral() - data.omega().zip_with(&rho, |w, r| w * r).unwrap().integral();
        assert!((r.mean() - expected).abs() < 1e-13);
    }

    #[test]
    fn lipschitz_quotient_stays_bounded() {
        // no constant is asserted; the quotient must be finite and of a stable size
        let grid = TorusGrid::new(1, 64).unwrap();
        let (data, _) = random_scenario(grid, 11, false);
        let m = 5;
        let mut worst: f64 = 0.0;
        for seed in 0..100 {
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            let r1 = forward_transform(&smooth_field(grid, &mut rng, 1.5, 0.3));
            let mut r2 = r1.clone();
            r2.add_scaled(&crate::spectral::random_band_limited(grid, 3, seed), 1e-3).unwrap();
            let a1 = rhs_regularized(&r1, 0.05, &data).unwrap();
            let a2 = rhs_regularized(&r2, 0.05, &data).unwrap();
            let q = crate::spectral::sobolev_norm(&a1.difference(&a2).unwrap(), m)
                / crate::spectral::sobolev_norm(&r1.difference(&r2).unwrap(), m);
            assert!(q.is_finite());
            worst = worst.max(q);
        }
        assert!(worst < 1e6, "max Lipschitz quotient {worst:e}");
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(1, 3).len(), 4);
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert!(multi_indices(2, 2).contains(&vec![1, 1]));
    }

    #[test]
    fn data_validation_names_the_field() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let p = ModelParams::new(0.1, 0.9, 0.5, 1.0).unwrap();
        let ok = GridField::constant(grid, 0.5);
        let bad_kappa = GridField::constant(grid, 1.2);
        let err = ModelData::new(p, bad_kappa, ok.clone(), ok.clone(), ok.clone(), TransferKernel::uniform(grid)).unwrap_err();
        assert!(matches!(err, ModelError::Constraint { rule: ValidationRule::KappaInUnitInterval, .. }));
        assert!(err.to_string().starts_with("kappa"));
        let neg = GridField::constant(grid, -0.1);
        let err = ModelData::new(p, ok.clone(), ok.clone(), neg, ok.clone(), TransferKernel::uniform(grid)).unwrap_err();
        assert!(matches!(err, ModelError::Constraint { rule: ValidationRule::OmegaNonnegative, .. }));
    }
}
