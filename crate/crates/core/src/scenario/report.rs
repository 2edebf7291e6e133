use serde::Serialize;

use super::{Scenario, ScenarioError};
use crate::analysis::{
    cancellation_audit, certify_energy, energy_inequality_ratio, epsilon_ladder_study, lower_bound_audit,
    mass_audit, uniqueness_consistency, AnalysisError, AuditReport, ConsistencyReport, ConvergenceTable,
    EnergyCertificate, EnergyTrace, Verdict,
};
use crate::integrator::{integrate, TerminalStatus, Trajectory};

/// Envelope certification uses `C_hat (1 + ENVELOPE_MARGIN)`.
pub const ENVELOPE_MARGIN: f64 = 0.1;
pub const CANCELLATION_TOL: f64 = 1e-10;
pub const LOWER_BOUND_TOL: f64 = 1e-6;
pub const MASS_TOL: f64 = 1e-6;
pub const ORDER_FLOOR: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub status: TerminalStatus,
    pub steps: usize,
    pub dt: f64,
    pub epsilon: f64,
    pub guard_m: u32,
    pub t_final: f64,
    pub rho_floor: f64,
    pub k_star: f64,
    pub t_m: Option<f64>,
    pub c_hat: Option<f64>,
    pub energy_certificate: Option<EnergyCertificate>,
    pub mass_drift_relative: Option<f64>,
    /// Trapezoid rule for `int_0^t ||D^{m+1} J rho||^2` over the records.
    pub dissipation_integral: f64,
}

/// Machine-readable outcome of one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSummary>,
    pub audits: Vec<AuditReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyReport>,
    pub passed: bool,
}

impl ReportBundle {
    fn new(kind: &str, run: Option<RunSummary>, audits: Vec<AuditReport>) -> Self {
        Self {
            kind: kind.into(),
            run,
            passed: audits.iter().all(|a| a.passed()),
            audits,
            convergence: None,
            consistency: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

fn trapezoid(traj: &Trajectory) -> f64 {
    traj.records
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].diagnostics.dissipation + w[1].diagnostics.dissipation))
        .sum()
}

/// Audits of one trajectory.
pub fn audit_run(traj: &Trajectory, scenario: &Scenario) -> Result<(RunSummary, Vec<AuditReport>), AnalysisError> {
    let data = &scenario.problem().data;
    let m = traj.guard_m;
    let mut audits = vec![cancellation_audit(traj, CANCELLATION_TOL)];
    let mut drift = None;
    if traj.records.len() >= 2 {
        let mass = mass_audit(traj, data)?;
        audits.push(mass.report(MASS_TOL * (1.0 + mass.source_scale)));
        drift = Some(mass.relative_drift);
    }
    let (mut c_hat, mut certificate) = (None, None);
    if traj.records.len() >= 3 {
        let trace = EnergyTrace::from_trajectory(traj, m)?;
        let c = energy_inequality_ratio(&trace, m)?;
        let cert = certify_energy(&trace, c, ENVELOPE_MARGIN)?;
        let mut report = AuditReport::at_most(
            "energy-envelope",
            cert.worst_ratio,
            1.0 + 1e-12,
            format!(
                "max E_m / envelope(C_hat (1 + {ENVELOPE_MARGIN})), {} checked, {} past blow-up",
                cert.checked, cert.vacuous
            ),
        );
        report.verdict = Verdict::from_bool(cert.passed);
        audits.push(report);
        c_hat = Some(c);
        certificate = Some(cert);
    }
    let lower = lower_bound_audit(traj, c_hat, LOWER_BOUND_TOL);
    audits.push(lower.report());
    let summary = RunSummary {
        status: traj.status.clone(),
        steps: traj.steps,
        dt: traj.dt,
        epsilon: traj.epsilon,
        guard_m: m,
        t_final: traj.last().t,
        rho_floor: traj.rho_floor,
        k_star: traj.k_star(),
        t_m: lower.t_m,
        c_hat,
        energy_certificate: certificate,
        mass_drift_relative: drift,
        dissipation_integral: trapezoid(traj),
    };
    Ok((summary, audits))
}

/// Single run plus audits.
pub fn simulate(scenario: &Scenario) -> Result<(Trajectory, ReportBundle), AnalysisError> {
    let traj = integrate(scenario.problem())?;
    let (summary, audits) = audit_run(&traj, scenario)?;
    let mut audits = audits;
    audits.insert(
        0,
        AuditReport::at_most(
            "run-completed",
            if traj.is_completed() { 0.0 } else { 1.0 },
            0.0,
            crate::analysis::describe_status(&traj.status),
        ),
    );
    Ok((traj, ReportBundle::new("simulate", Some(summary), audits)))
}

/// Convergence ladder at fixed data.
pub fn epsilon_study(scenario: &Scenario, epsilons: &[f64], m_prime: u32) -> Result<ReportBundle, AnalysisError> {
    let table = epsilon_ladder_study(scenario.problem(), epsilons, m_prime)?;
    let worst_step = table
        .differences
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    let mut decreasing = AuditReport::at_most(
        "epsilon-differences-decreasing",
        worst_step,
        1.0,
        "max diff_(i+1) / diff_i, must stay below 1",
    );
    decreasing.verdict = Verdict::from_bool(table.strictly_decreasing);
    let order = AuditReport::at_least(
        "epsilon-order",
        table.order.unwrap_or(f64::NAN),
        ORDER_FLOOR,
        format!("log-log slope of H^{m_prime} differences against epsilon"),
    );
    let mut bundle = ReportBundle::new("epsilon-study", None, vec![decreasing, order]);
    bundle.convergence = Some(table);
    Ok(bundle)
}

/// Same scenario at `n` and `n2 = 2n`.
pub fn resolution_check(scenario: &Scenario, n2: usize) -> Result<ReportBundle, StudyError> {
    let (m_prime, threshold) = scenario
        .spec
        .studies
        .resolution
        .as_ref()
        .map(|r| (r.m_prime, r.threshold))
        .unwrap_or((3, 1e-6));
    let fine = scenario.problem_on(n2)?;
    let report = uniqueness_consistency(scenario.problem(), &fine, m_prime, threshold)?;
    let mut bundle = ReportBundle::new("resolution-check", None, vec![report.audit.clone()]);
    bundle.consistency = Some(report);
    Ok(bundle)
}
