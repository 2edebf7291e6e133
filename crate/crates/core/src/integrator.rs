//! Method-of-lines time stepping of the regularized system with classical RK4.
//!
//! A run stays inside the guarded set
//! `{ ||rho||_{H^m} < K, min rho > rho_floor / 2 }` where `rho_floor` is the
//! minimum of the initial condition; leaving it halts the run with a guard
//! event rather than an error.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{squared_norm, GridField, TorusGrid};
use crate::model::ModelError;
use crate::rhs::{exchange_terms, rhs_regularized, ModelData};
use crate::spectral::{derivative_energy_weights, forward_transform, inverse_transform, SpectralField};

/// Extent of the classical RK4 stability region along the negative real axis.
pub const RK4_STABILITY_EXTENT: f64 = 2.785;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial condition and model data live on different grids")]
    GridMismatch,
    #[error("initial state rejected: {0}")]
    InitialState(#[source] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DtPolicy {
    Fixed(f64),
    /// Stability-limited step, optionally capped at `max_dt` for accuracy.
    Auto { safety: f64, max_dt: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub dt_policy: DtPolicy,
    pub t_end: f64,
    /// Radius `K` of the `H^m` ball.
    pub guard_radius: f64,
    /// Sobolev index `m` of the guard and of the recorded energy.
    pub guard_m: u32,
    pub record_every: usize,
}

impl SolverConfig {
    /// Smallest integer above `d + 3`.
    pub fn default_guard_m(dim: usize) -> u32 {
        dim as u32 + 4
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |msg: String| Err(IntegrateError::InvalidConfig(msg));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} must be >= 0", self.epsilon));
        }
        match self.dt_policy {
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("fixed dt = {dt} must be > 0"))
            }
            DtPolicy::Auto { safety, .. } if !(safety > 0.0 && safety <= 1.0) => {
                return bad(format!("safety = {safety} must lie in (0, 1]"))
            }
            DtPolicy::Auto { max_dt: Some(cap), .. } if !(cap > 0.0) => {
                return bad(format!("max_dt = {cap} must be > 0"))
            }
            _ => {}
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be > 0", self.t_end));
        }
        if !(self.guard_radius > 0.0) {
            return bad(format!("guard radius K = {} must be > 0", self.guard_radius));
        }
        if self.guard_m > crate::spectral::MAX_DERIVATIVE_ORDER {
            return bad(format!("guard m = {} exceeds supported order", self.guard_m));
        }
        if self.record_every == 0 {
            return bad("record_every must be >= 1".into());
        }
        Ok(())
    }
}

/// Diffusive and reactive stiffness estimates `(lambda_diff, lambda_react)`.
///
/// `lambda_diff = delta u+ max_k 4 pi^2 |k|^2 exp(-2 eps |k|^2)` over resolved
/// modes; `lambda_react = sup omega + sup gamma`.
pub fn stiffness(eps: f64, grid: &TorusGrid, data: &ModelData) -> (f64, f64) {
    let p = data.params();
    let mut peak = 0.0_f64;
    for i in 0..grid.len() {
        let k2 = squared_norm(&grid.wavevector(i));
        peak = peak.max(4.0 * PI * PI * k2 * (-2.0 * eps * k2).exp());
    }
    let diff = p.delta() * p.u_plus() * peak;
    let react = data.omega().sup_norm() + data.gamma().sup_norm();
    (diff, react)
}

/// Largest RK4 step `safety * 2.785 / (lambda_diff + lambda_react)`; infinite
/// when nothing is stiff.
pub fn stable_dt(eps: f64, grid: &TorusGrid, data: &ModelData, safety: f64) -> f64 {
    let (diff, react) = stiffness(eps, grid, data);
    let lambda = diff + react;
    if lambda > 0.0 {
        safety * RK4_STABILITY_EXTENT / lambda
    } else {
        f64::INFINITY
    }
}

/// Per-state measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub mass: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    /// `E_m = ||rho||^2_{H^m} / 2`.
    pub energy: f64,
    /// `||A^eps[rho]||_{L^inf}` on the grid.
    pub sup_rhs: f64,
    /// `||D^{m+1} J^eps rho||^2_{L^2}`.
    pub dissipation: f64,
    /// `int (I[gamma rho u] - gamma rho u) dx`.
    pub exchange_imbalance: f64,
    /// `||gamma rho u||_{L^1}`.
    pub exchange_l1: f64,
}

/// Precomputed per-mode weights for a grid, `m` and `eps`.
#[derive(Debug, Clone)]
struct Weights {
    energy: Vec<f64>,
    dissipation: Vec<f64>,
}

impl Weights {
    fn new(grid: &TorusGrid, m: u32, eps: f64) -> Self {
        let dim = grid.dim();
        let (mut energy, mut dissipation) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
        for i in 0..grid.len() {
            let k = grid.wavevector(i);
            let h = derivative_energy_weights(&k, dim, m + 1);
            energy.push(h[..=m as usize].iter().sum());
            dissipation.push(h[m as usize + 1] * (-2.0 * eps * squared_norm(&k)).exp());
        }
        Self { energy, dissipation }
    }

    fn apply(&self, f: &SpectralField, w: &[f64]) -> f64 {
        f.coeffs().iter().zip(w).map(|(c, w)| w * c.norm_sqr()).sum()
    }
}

/// State of a run at one time level, with the right-hand side evaluated there.
#[derive(Debug, Clone)]
pub struct RunState {
    pub t: f64,
    pub rho: SpectralField,
    pub rho_grid: GridField,
    /// Minimum of the initial condition.
    pub rho_floor: f64,
    pub rhs: SpectralField,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuardKind {
    NormExit,
    PositivityExit,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardOutcome {
    Ok,
    Guard(GuardKind),
}

/// Membership test for the guarded set.
pub fn guard_check(state: &RunState, config: &SolverConfig) -> GuardOutcome {
    let d = &state.diagnostics;
    let finite = state.rho.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite())
        && d.energy.is_finite()
        && d.min_rho.is_finite();
    if !finite {
        return GuardOutcome::Guard(GuardKind::NonFinite);
    }
    if d.min_rho <= 0.5 * state.rho_floor {
        return GuardOutcome::Guard(GuardKind::PositivityExit);
    }
    if (2.0 * d.energy).sqrt() >= config.guard_radius {
        return GuardOutcome::Guard(GuardKind::NormExit);
    }
    GuardOutcome::Ok
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TerminalStatus {
    Completed,
    Guard { kind: GuardKind, t: f64 },
    StepFailure { t: f64, stage: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFailure {
    /// Time at which the failing stage was evaluated.
    pub t: f64,
    /// 2..=4 for RK stages, 5 for the right-hand side at the new state.
    pub stage: usize,
    pub source: ModelError,
}

/// Pieces of a run that stay fixed across steps.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    data: &'a ModelData,
    eps: f64,
    weights: Weights,
}

impl<'a> Stepper<'a> {
    pub fn new(data: &'a ModelData, eps: f64, m: u32) -> Self {
        Self {
            data,
            eps,
            weights: Weights::new(data.grid(), m, eps),
        }
    }

    /// Evaluates the right-hand side and diagnostics at `(t, rho)`.
    pub fn state(&self, t: f64, rho: SpectralField, rho_floor: f64) -> Result<RunState, ModelError> {
        let rhs = rhs_regularized(&rho, self.eps, self.data)?;
        let rho_grid = inverse_transform(&rho)?;
        let rhs_grid = inverse_transform(&rhs)?;
        let (q, iq) = exchange_terms(&rho_grid, self.data)?;
        let diagnostics = Diagnostics {
            mass: rho_grid.integral(),
            min_rho: rho_grid.min_value(),
            max_rho: rho_grid.max_value(),
            energy: 0.5 * self.weights.apply(&rho, &self.weights.energy),
            sup_rhs: rhs_grid.sup_norm(),
            dissipation: self.weights.apply(&rho, &self.weights.dissipation),
            exchange_imbalance: iq.integral() - q.integral(),
            exchange_l1: q.l1_norm(),
        };
        Ok(RunState {
            t,
            rho,
            rho_grid,
            rho_floor,
            rhs,
            diagnostics,
        })
    }

    /// One classical RK4 step. Returns the new state and the largest grid sup
    /// of the four stage slopes.
    pub fn step(&self, state: &RunState, dt: f64) -> Result<(RunState, f64), StepFailure> {
        let fail = |t: f64, stage: usize| move |source: ModelError| StepFailure { t, stage, source };
        let eval = |rho: &SpectralField, t: f64, stage: usize| -> Result<(SpectralField, f64), StepFailure> {
            let k = rhs_regularized(rho, self.eps, self.data).map_err(fail(t, stage))?;
            let sup = inverse_transform(&k)
                .map_err(|e| fail(t, stage)(e.into()))?
                .sup_norm();
            Ok((k, sup))
        };
        let shifted = |k: &SpectralField, a: f64| {
            let mut y = state.rho.clone();
            y.add_scaled(k, a).expect("same grid");
            y
        };
        let k1 = &state.rhs;
        let t = state.t;
        let (k2, s2) = eval(&shifted(k1, 0.5 * dt), t + 0.5 * dt, 2)?;
        let (k3, s3) = eval(&shifted(&k2, 0.5 * dt), t + 0.5 * dt, 3)?;
        let (k4, s4) = eval(&shifted(&k3, dt), t + dt, 4)?;

        let mut next = state.rho.clone();
        next.add_scaled(k1, dt / 6.0).expect("same grid");
        next.add_scaled(&k2, dt / 3.0).expect("same grid");
        next.add_scaled(&k3, dt / 3.0).expect("same grid");
        next.add_scaled(&k4, dt / 6.0).expect("same grid");

        let new_state = self
            .state(t + dt, next, state.rho_floor)
            .map_err(fail(t + dt, 5))?;
        let sup = state.diagnostics.sup_rhs.max(s2).max(s3).max(s4);
        Ok((new_state, sup))
    }
}

/// Free-function form of [`Stepper::step`].
pub fn step_rk4(
    state: &RunState,
    dt: f64,
    eps: f64,
    data: &ModelData,
    m: u32,
) -> Result<RunState, StepFailure> {
    Stepper::new(data, eps, m).step(state, dt).map(|(s, _)| s)
}

/// One stored sample of a run.
#[derive(Debug, Clone)]
pub struct Record {
    pub t: f64,
    /// Step size that produced this record; 0 for the initial record.
    pub dt: f64,
    pub rho: SpectralField,
    pub diagnostics: Diagnostics,
    /// Running sup of stage slopes up to this time (the `K*` proxy).
    pub k_star: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub status: TerminalStatus,
    pub rho_floor: f64,
    pub epsilon: f64,
    pub guard_m: u32,
    pub steps: usize,
    /// Uniform step actually used.
    pub dt: f64,
}

impl Trajectory {
    pub fn is_completed(&self) -> bool {
        self.status == TerminalStatus::Completed
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectory always holds the initial record")
    }

    pub fn k_star(&self) -> f64 {
        self.last().k_star
    }

    pub fn grid(&self) -> &TorusGrid {
        self.records[0].rho.grid()
    }
}

/// Everything needed for one run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub data: ModelData,
    pub rho0: GridField,
    pub config: SolverConfig,
}

impl Problem {
    pub fn with_epsilon(&self, eps: f64) -> Problem {
        let mut p = self.clone();
        p.config.epsilon = eps;
        p
    }

    /// Step size the run will use (uniform, dividing `t_end`).
    pub fn step_size(&self) -> (f64, usize) {
        let c = &self.config;
        let nominal = match c.dt_policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Auto { safety, max_dt } => {
                stable_dt(c.epsilon, self.data.grid(), &self.data, safety).min(max_dt.unwrap_or(f64::INFINITY))
            }
        }
        .min(c.t_end);
        let steps = ((c.t_end / nominal) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (c.t_end / steps as f64, steps)
    }
}

/// Runs to `t_end` or until the state leaves the guarded set.
pub fn integrate(problem: &Problem) -> Result<Trajectory, IntegrateError> {
    let config = &problem.config;
    config.validate()?;
    let data = &problem.data;
    if problem.rho0.grid() != data.grid() {
        return Err(IntegrateError::GridMismatch);
    }
    let rho_floor = problem.rho0.min_value();
    if !(rho_floor > 0.0) {
        return Err(IntegrateError::InitialState(ModelError::Positivity {
            field: "rho0",
            min: rho_floor,
        }));
    }
    let stepper = Stepper::new(data, config.epsilon, config.guard_m);
    let mut state = stepper
        .state(0.0, forward_transform(&problem.rho0), rho_floor)
        .map_err(IntegrateError::InitialState)?;
    let (dt, steps) = problem.step_size();

    let mut k_star = state.diagnostics.sup_rhs;
    let record = |s: &RunState, dt: f64, k_star: f64| Record {
        t: s.t,
        dt,
        rho: s.rho.clone(),
        diagnostics: s.diagnostics,
        k_star,
    };
    let mut records = vec![record(&state, 0.0, k_star)];
    let finish = |records, status, taken| Trajectory {
        records,
        status,
        rho_floor,
        epsilon: config.epsilon,
        guard_m: config.guard_m,
        steps: taken,
        dt,
    };

    if let GuardOutcome::Guard(kind) = guard_check(&state, config) {
        return Ok(finish(records, TerminalStatus::Guard { kind, t: 0.0 }, 0));
    }
    for step in 1..=steps {
        let (next, stage_sup) = match stepper.step(&state, dt) {
            Ok(v) => v,
            Err(f) => {
                let status = TerminalStatus::StepFailure {
                    t: f.t,
                    stage: f.stage,
                    message: f.source.to_string(),
                };
                return Ok(finish(records, status, step - 1));
            }
        };
        k_star = k_star.max(stage_sup).max(next.diagnostics.sup_rhs);
        // land exactly on t_end
        state = RunState {
            t: if step == steps { config.t_end } else { step as f64 * dt },
            ..next
        };
        let guard = guard_check(&state, config);
        if step % config.record_every == 0 || step == steps || guard != GuardOutcome::Ok {
            records.push(record(&state, dt, k_star));
        }
        if let GuardOutcome::Guard(kind) = guard {
            return Ok(finish(records, TerminalStatus::Guard { kind, t: state.t }, step));
        }
    }
    Ok(finish(records, TerminalStatus::Completed, steps))
}
