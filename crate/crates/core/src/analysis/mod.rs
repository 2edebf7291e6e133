//! Measurements over trajectories: energy envelopes, audits, convergence
//! ladders and the mollifier property suite.

mod audits;
mod energy;
mod ladder;
mod mollifier;

use serde::Serialize;
use thiserror::Error;

use crate::integrator::{IntegrateError, TerminalStatus};
use crate::model::ModelError;
use crate::spectral::SpectralError;

pub use audits::{
    cancellation_audit, lower_bound_audit, mass_audit, LowerBoundAudit, MassAudit,
};
pub use energy::{
    certify_energy, energy, energy_inequality_ratio, envelope, existence_horizon, time_derivative,
    EnergyCertificate, EnergyTrace, EnvelopeParams, ENERGY_NOISE_REL,
};
pub use ladder::{epsilon_ladder_study, fit_order, uniqueness_consistency, ConvergenceTable, ConsistencyReport};
pub use mollifier::{
    mollifier_checks, mollifier_lemma_suite, MollifierReport, CONTRACTION_LADDER, RATE_LADDER, SCALING_BOUND, SCALING_LADDER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} samples, got {got}")]
    DegenerateTrace { needed: usize, got: usize },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid envelope parameters: {0}")]
    InvalidEnvelope(String),
    #[error("t = {t} lies beyond the existence horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("invalid epsilon ladder: {0}")]
    InvalidLadder(String),
    #[error("run at epsilon = {epsilon} did not complete: {status}")]
    LadderRunFailed { epsilon: f64, status: String },
    #[error("{which} run did not complete: {status}")]
    RunFailed { which: &'static str, status: String },
    #[error("invalid resolution pair: {0}")]
    InvalidResolution(String),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub fn describe_status(status: &TerminalStatus) -> String {
    match status {
        TerminalStatus::Completed => "completed".into(),
        TerminalStatus::Guard { kind, t } => format!("guard {kind:?} at t = {t}"),
        TerminalStatus::StepFailure { t, stage, message } => {
            format!("step failure at t = {t} (stage {stage}): {message}")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Direction of the tolerance comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

/// One named check with its measured value, tolerance and verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub verdict: Verdict,
    pub detail: String,
}

impl AuditReport {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            comparison: Comparison::AtMost,
            verdict: Verdict::from_bool(value <= tolerance),
            detail: detail.into(),
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            comparison: Comparison::AtLeast,
            verdict: Verdict::from_bool(value >= tolerance),
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}
