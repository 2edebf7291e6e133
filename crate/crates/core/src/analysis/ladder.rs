use serde::Serialize;

use super::{describe_status, AnalysisError, AuditReport};
use crate::integrator::{integrate, DtPolicy, Problem, Trajectory};
use crate::spectral::{resample, sobolev_norm};

/// Successive `H^{m'}` differences at `t_end` along a decreasing epsilon ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub epsilons: Vec<f64>,
    pub m_prime: u32,
    /// Common step used by every run.
    pub dt: f64,
    /// `||rho^(eps_i) - rho^(eps_{i+1})||_{H^{m'}}`.
    pub differences: Vec<f64>,
    /// Slope of `log diff_i` against `log eps_i` over positive differences.
    pub order: Option<f64>,
    pub strictly_decreasing: bool,
}

/// Least-squares slope of `log y` against `log x`, skipping `y <= 0`.
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn common_dt(problems: &[Problem]) -> f64 {
    problems.iter().map(|p| p.step_size().0).fold(f64::INFINITY, f64::min)
}

/// Runs the problem at each epsilon concurrently with a shared step and
/// compares consecutive final states. Duplicate epsilons are allowed and give
/// a zero difference.
pub fn epsilon_ladder_study(problem: &Problem, epsilons: &[f64], m_prime: u32) -> Result<ConvergenceTable, AnalysisError> {
    if epsilons.len() < 2 {
        return Err(AnalysisError::InvalidLadder("need at least two epsilons".into()));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(AnalysisError::InvalidLadder(format!("epsilon {e} must be finite and >= 0")));
    }
    if epsilons.windows(2).any(|w| w[1] > w[0]) {
        return Err(AnalysisError::InvalidLadder("epsilons must not increase".into()));
    }
    let dim = problem.data.grid().dim() as f64;
    if !(m_prime as f64 > dim / 2.0 && m_prime < problem.config.guard_m) {
        return Err(AnalysisError::InvalidLadder(format!(
            "m' = {m_prime} must satisfy d/2 < m' < guard m = {}",
            problem.config.guard_m
        )));
    }
    let mut runs: Vec<Problem> = epsilons.iter().map(|&e| problem.with_epsilon(e)).collect();
    let dt = common_dt(&runs);
    for r in &mut runs {
        r.config.dt_policy = DtPolicy::Fixed(dt);
    }
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = runs.iter().map(|p| s.spawn(move || integrate(p))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ladder run panicked"))
            .collect()
    });
    let mut finals = Vec::with_capacity(runs.len());
    for (eps, res) in epsilons.iter().zip(results) {
        let traj = res?;
        if !traj.is_completed() {
            return Err(AnalysisError::LadderRunFailed {
                epsilon: *eps,
                status: describe_status(&traj.status),
            });
        }
        finals.push(traj.last().rho.clone());
    }
    let differences: Vec<f64> = finals
        .windows(2)
        .map(|w| sobolev_norm(&w[0].difference(&w[1]).expect("same grid"), m_prime))
        .collect();
    let order = fit_order(&epsilons[..differences.len()], &differences);
    Ok(ConvergenceTable {
        epsilons: epsilons.to_vec(),
        m_prime,
        dt,
        strictly_decreasing: differences.windows(2).all(|w| w[1] < w[0]),
        differences,
        order,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub n_coarse: usize,
    pub n_fine: usize,
    pub m_prime: u32,
    pub dt: f64,
    /// `||P rho_coarse - rho_fine||_{H^{m'}}` at `t_end`, `P` the spectral
    /// up-sampling.
    pub difference: f64,
    pub audit: AuditReport,
}

/// Runs the same scenario on a grid and on its refinement with a shared step
/// and compares the final states on the fine grid.
pub fn uniqueness_consistency(
    coarse: &Problem,
    fine: &Problem,
    m_prime: u32,
    threshold: f64,
) -> Result<ConsistencyReport, AnalysisError> {
    let (gc, gf) = (*coarse.data.grid(), *fine.data.grid());
    if gc.dim() != gf.dim() || gf.n() != 2 * gc.n() {
        return Err(AnalysisError::InvalidResolution(format!(
            "fine grid must double the coarse one, got n = {} and n = {}",
            gc.n(),
            gf.n()
        )));
    }
    let dt = common_dt(&[coarse.clone(), fine.clone()]);
    let run = |p: &Problem, which: &'static str| -> Result<Trajectory, AnalysisError> {
        let mut p = p.clone();
        p.config.dt_policy = DtPolicy::Fixed(dt);
        let traj = integrate(&p)?;
        if !traj.is_completed() {
            return Err(AnalysisError::RunFailed {
                which,
                status: describe_status(&traj.status),
            });
        }
        Ok(traj)
    };
    let (a, b) = std::thread::scope(|s| {
        let h = s.spawn(|| run(coarse, "coarse"));
        let b = run(fine, "fine");
        (h.join().expect("coarse run panicked"), b)
    });
    let (a, b) = (a?, b?);
    let up = resample(&a.last().rho, gf)?;
    let difference = sobolev_norm(&up.difference(&b.last().rho)?, m_prime);
    Ok(ConsistencyReport {
        n_coarse: gc.n(),
        n_fine: gf.n(),
        m_prime,
        dt,
        difference,
        audit: AuditReport::at_most(
            "resolution-consistency",
            difference,
            threshold,
            format!("H^{m_prime} distance between n = {} and n = {} at t_end", gc.n(), gf.n()),
        ),
    })
}
