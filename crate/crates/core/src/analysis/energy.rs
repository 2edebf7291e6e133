use serde::Serialize;

use super::AnalysisError;
use crate::integrator::Trajectory;
use crate::spectral::{sobolev_norm, SpectralField};

/// Relative size below which an energy increment is treated as roundoff.
pub const ENERGY_NOISE_REL: f64 = 1e-12;

/// `E_m = ||rho||^2_{H^m} / 2`.
pub fn energy(rho: &SpectralField, m: u32) -> f64 {
    let n = sobolev_norm(rho, m);
    0.5 * n * n
}

/// Derivative of samples `y(t)` by three-point Lagrange differences: centered
/// at interior points, one-sided at the ends. Two samples give the secant.
pub fn time_derivative(t: &[f64], y: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if t.len() != y.len() {
        return Err(AnalysisError::InvalidTrace(format!(
            "{} times but {} values",
            t.len(),
            y.len()
        )));
    }
    let n = t.len();
    if n < 2 {
        return Err(AnalysisError::DegenerateTrace { needed: 2, got: n });
    }
    if n == 2 {
        let s = (y[1] - y[0]) / (t[1] - t[0]);
        return Ok(vec![s, s]);
    }
    let lagrange = |i0: usize, x: f64| {
        let (x0, x1, x2) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let d0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let d1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let d2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        d0 * y[i0] + d1 * y[i0 + 1] + d2 * y[i0 + 2]
    };
    Ok((0..n)
        .map(|i| {
            let i0 = i.saturating_sub(1).min(n - 3);
            lagrange(i0, t[i])
        })
        .collect())
}

/// Energy samples of a run with their time derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub m: u32,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub derivatives: Vec<f64>,
}

impl EnergyTrace {
    pub fn new(times: Vec<f64>, energies: Vec<f64>, m: u32) -> Result<Self, AnalysisError> {
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(AnalysisError::InvalidTrace("times must increase strictly".into()));
        }
        if let Some(e) = energies.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(AnalysisError::InvalidTrace(format!("energy {e} is not a finite nonnegative value")));
        }
        let derivatives = time_derivative(&times, &energies)?;
        Ok(Self {
            m,
            times,
            energies,
            derivatives,
        })
    }

    pub fn from_trajectory(traj: &Trajectory, m: u32) -> Result<Self, AnalysisError> {
        let times = traj.records.iter().map(|r| r.t).collect();
        let energies = traj.records.iter().map(|r| energy(&r.rho, m)).collect();
        Self::new(times, energies, m)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `C_hat = max max(E', 0) / (E^{1/2} + E^{(m+3)/2})` over interior samples.
///
/// Increments `|E(t+) - E(t-)|` below [`ENERGY_NOISE_REL`] times the local
/// energy count as zero.
pub fn energy_inequality_ratio(trace: &EnergyTrace, m: u32) -> Result<f64, AnalysisError> {
    let n = trace.len();
    if n < 3 {
        return Err(AnalysisError::DegenerateTrace { needed: 3, got: n });
    }
    let e = &trace.energies;
    let mut c_hat = 0.0_f64;
    for i in 1..n - 1 {
        let jump = (e[i + 1] - e[i - 1]).abs();
        if jump <= ENERGY_NOISE_REL * e[i - 1].max(e[i + 1]) {
            continue;
        }
        let de = trace.derivatives[i];
        if de <= 0.0 {
            continue;
        }
        let denom = e[i].sqrt() + e[i].powf(0.5 * (m as f64 + 3.0));
        c_hat = c_hat.max(de / denom);
    }
    if !c_hat.is_finite() {
        return Err(AnalysisError::InvalidTrace("energy grows from zero".into()));
    }
    Ok(c_hat)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeParams {
    e0: f64,
    c: f64,
    m: u32,
}

impl EnvelopeParams {
    pub fn new(e0: f64, c: f64, m: u32) -> Result<Self, AnalysisError> {
        if !(e0 >= 0.0 && e0.is_finite()) {
            return Err(AnalysisError::InvalidEnvelope(format!("E0 = {e0} must be finite and >= 0")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(AnalysisError::InvalidEnvelope(format!("C = {c} must be finite and > 0")));
        }
        Ok(Self { e0, c, m })
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    fn exponent(&self) -> f64 {
        self.m as f64 + 1.0
    }
}

/// `T_E = (1 - E0^{1/2}) / (2C)` for `E0 < 1`, else `E0^{-(m+1)/2} / ((m+1) C)`.
pub fn existence_horizon(p: &EnvelopeParams) -> f64 {
    if p.e0 < 1.0 {
        (1.0 - p.e0.sqrt()) / (2.0 * p.c)
    } else {
        p.e0.powf(-0.5 * p.exponent()) / (p.exponent() * p.c)
    }
}

/// `(E0^{1/2} + 2Ct)^2` for `E0 < 1` (valid up to and including `T_E`), else
/// `(E0^{-(m+1)/2} - (m+1)Ct)^{-2/(m+1)}` (valid strictly before `T_E`).
pub fn envelope(p: &EnvelopeParams, t: f64) -> Result<f64, AnalysisError> {
    let horizon = existence_horizon(p);
    let beyond = AnalysisError::BeyondHorizon { t, horizon };
    if !(t >= 0.0) {
        return Err(AnalysisError::InvalidEnvelope(format!("t = {t} must be >= 0")));
    }
    if p.e0 < 1.0 {
        if t > horizon {
            return Err(beyond);
        }
        let s = p.e0.sqrt() + 2.0 * p.c * t;
        Ok(s * s)
    } else {
        if t >= horizon {
            return Err(beyond);
        }
        let q = p.exponent();
        Ok((p.e0.powf(-0.5 * q) - q * p.c * t).powf(-2.0 / q))
    }
}

/// Comparison bound valid past `T_E` when `E0 < 1`: after the energy reaches
/// the case boundary the second branch restarts from `E = 1` at `T_E`.
/// Infinite from its own blow-up time on.
fn continued_envelope(p: &EnvelopeParams, t: f64) -> f64 {
    let horizon = existence_horizon(p);
    if p.e0 >= 1.0 || t <= horizon {
        return envelope(p, t).unwrap_or(f64::INFINITY);
    }
    let q = p.exponent();
    let base = 1.0 - q * p.c * (t - horizon);
    if base <= 0.0 {
        f64::INFINITY
    } else {
        base.powf(-2.0 / q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyCertificate {
    pub c_hat: f64,
    /// Constant actually used: `C_hat (1 + margin)`.
    pub c_used: f64,
    pub e0: f64,
    pub horizon: f64,
    /// Records with a finite bound that was checked.
    pub checked: usize,
    /// Records past the blow-up of the bound (nothing to check).
    pub vacuous: usize,
    /// Largest `E(t) / bound(t)` over checked records.
    pub worst_ratio: f64,
    pub passed: bool,
}

/// Checks `E(t) <= envelope(E0, C_hat (1 + margin), m, t)` at every record.
/// With `C_hat = 0` the bound is `E(t) <= E0` up to roundoff.
pub fn certify_energy(trace: &EnergyTrace, c_hat: f64, margin: f64) -> Result<EnergyCertificate, AnalysisError> {
    if trace.is_empty() {
        return Err(AnalysisError::DegenerateTrace { needed: 1, got: 0 });
    }
    let e0 = trace.energies[0];
    let slack = 1.0 + 1e-12;
    let c_used = c_hat * (1.0 + margin);
    let (bound, horizon): (Box<dyn Fn(f64) -> f64>, f64) = if c_used > 0.0 {
        let p = EnvelopeParams::new(e0, c_used, trace.m)?;
        let horizon = existence_horizon(&p);
        (Box::new(move |t| continued_envelope(&p, t)), horizon)
    } else {
        (Box::new(move |_| e0), f64::INFINITY)
    };
    let (mut checked, mut vacuous, mut worst) = (0, 0, 0.0_f64);
    for (&t, &e) in trace.times.iter().zip(&trace.energies) {
        let b = bound(t);
        if b.is_infinite() {
            vacuous += 1;
            continue;
        }
        checked += 1;
        worst = worst.max(if b > 0.0 { e / b } else if e > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(EnergyCertificate {
        c_hat,
        c_used,
        e0,
        horizon,
        checked,
        vacuous,
        worst_ratio: worst,
        passed: worst <= slack,
    })
}
