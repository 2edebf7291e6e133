use serde::Serialize;

use super::energy::{existence_horizon, EnvelopeParams};
use super::{AnalysisError, AuditReport};
use crate::integrator::Trajectory;
use crate::rhs::ModelData;
use crate::spectral::inverse_transform;

use super::time_derivative;

/// Mass balance `d/dt int rho = int eta - int omega rho` along a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassAudit {
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    /// `d/dt int rho - (int eta - int omega rho)` per record.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// `max |int rho(t) - int rho(0)| / int rho(0)`.
    pub relative_drift: f64,
    /// Largest `|int eta - int omega rho|`, the scale of the balance.
    pub source_scale: f64,
}

impl MassAudit {
    pub fn report(&self, tolerance: f64) -> AuditReport {
        AuditReport::at_most(
            "mass-balance",
            self.max_residual,
            tolerance,
            format!(
                "max |d/dt mass - (int eta - int omega rho)| over {} records",
                self.times.len()
            ),
        )
    }
}

pub fn mass_audit(traj: &Trajectory, data: &ModelData) -> Result<MassAudit, AnalysisError> {
    let n = traj.records.len();
    if n < 2 {
        return Err(AnalysisError::DegenerateTrace { needed: 2, got: n });
    }
    let times: Vec<f64> = traj.records.iter().map(|r| r.t).collect();
    let masses: Vec<f64> = traj.records.iter().map(|r| r.rho.mean()).collect();
    let rate = time_derivative(&times, &masses)?;
    let eta = data.eta().integral();
    let mut residuals = Vec::with_capacity(n);
    let mut source_scale = 0.0_f64;
    for (r, d) in traj.records.iter().zip(&rate) {
        let rho = inverse_transform(&r.rho)?;
        let source = eta - data.omega().dot(&rho).map_err(crate::model::ModelError::from)?;
        source_scale = source_scale.max(source.abs());
        residuals.push(d - source);
    }
    let m0 = masses[0];
    let relative_drift = masses.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max) / m0.abs();
    Ok(MassAudit {
        max_residual: residuals.iter().map(|r| r.abs()).fold(0.0, f64::max),
        times,
        masses,
        residuals,
        relative_drift,
        source_scale,
    })
}

/// Checks `|int (I[q] - q)| <= tol * ||q||_{L^1}` with `q = gamma rho u` at
/// every record. The value reported is the worst normalized imbalance.
pub fn cancellation_audit(traj: &Trajectory, tolerance: f64) -> AuditReport {
    let worst = traj
        .records
        .iter()
        .map(|r| {
            let d = &r.diagnostics;
            if d.exchange_l1 > 0.0 {
                d.exchange_imbalance.abs() / d.exchange_l1
            } else {
                d.exchange_imbalance.abs()
            }
        })
        .fold(0.0, f64::max);
    AuditReport::at_most(
        "nonlocal-cancellation",
        worst,
        tolerance,
        "max |int (I[q] - q)| / ||q||_L1 over records",
    )
}

/// Lower bound `min rho(t) >= rho_floor - K* t` with `K*` the largest stage
/// slope seen during the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundAudit {
    pub rho_floor: f64,
    pub k_star: f64,
    /// `min rho(t) - (rho_floor - K* t)` minimized over records.
    pub worst_margin: f64,
    pub tolerance: f64,
    /// `min(horizon(E0, C_hat, m), rho_floor / (4 K*))`; `None` when both are
    /// unbounded.
    pub t_m: Option<f64>,
    pub horizon: Option<f64>,
    pub passed: bool,
}

impl LowerBoundAudit {
    pub fn report(&self) -> AuditReport {
        AuditReport::at_least(
            "lower-bound",
            self.worst_margin,
            -self.tolerance,
            format!("min rho(t) - (rho_floor - K* t), K* = {:e}", self.k_star),
        )
    }
}

/// `c_hat`, when given, fixes the envelope horizon entering `T_m`.
pub fn lower_bound_audit(traj: &Trajectory, c_hat: Option<f64>, tolerance: f64) -> LowerBoundAudit {
    let k_star = traj.k_star();
    let floor = traj.rho_floor;
    let worst_margin = traj
        .records
        .iter()
        .map(|r| r.diagnostics.min_rho - (floor - k_star * r.t))
        .fold(f64::INFINITY, f64::min);
    let e0 = traj.records[0].diagnostics.energy;
    let horizon = c_hat
        .filter(|c| *c > 0.0)
        .and_then(|c| EnvelopeParams::new(e0, c, traj.guard_m).ok())
        .map(|p| existence_horizon(&p));
    let floor_time = (k_star > 0.0).then(|| floor / (4.0 * k_star));
    let t_m = match (horizon, floor_time) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    LowerBoundAudit {
        rho_floor: floor,
        k_star,
        worst_margin,
        tolerance,
        t_m,
        horizon,
        passed: worst_margin >= -tolerance,
    }
}
