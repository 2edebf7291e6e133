//! Scenario files, field rendering and run artifacts.
//!
//! A scenario is one JSON document (`schema_version` 1). Dense kernels live in
//! a sidecar of little-endian `f64` values, row-major in `(y, x)`, referenced
//! by a path relative to the scenario file.

mod output;
mod render;
mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridField, TorusGrid};
use crate::integrator::{DtPolicy, Problem, SolverConfig};
use crate::kernel::{kernel_normalize, RawKernel, TransferKernel};
use crate::model::{violation, ModelError, ModelParams, ValidationRule};
use crate::rhs::ModelData;
use crate::spectral::{forward_transform, sobolev_norm};

pub use output::{timeseries_csv, write_outputs, write_timeseries, OutputError, TIMESERIES_HEADER};
pub use render::{gaussian_bump_1d, render_field};
pub use report::{audit_run, epsilon_study, resolution_check, simulate, ReportBundle, RunSummary, StudyError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Version(u32),
    #[error("cannot render `{field}`: {message}")]
    Render { field: String, message: String },
    #[error("`{field}`: {source}")]
    Constraint {
        field: String,
        #[source]
        source: ModelError,
    },
    #[error("kernel sidecar {}: {message}", path.display())]
    Sidecar { path: PathBuf, message: String },
    #[error("{0}")]
    CrossValidation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    fn schema(path: &str, message: impl Into<String>) -> Self {
        ScenarioError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    fn constraint(field: &str, source: ModelError) -> Self {
        ScenarioError::Constraint {
            field: field.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub delta: f64,
    pub u_plus: f64,
    pub u_minus: f64,
    pub rho_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PresetSpec {
    /// `baseline + height * sum_s exp(-|x - center - s|^2 / (2 width^2))`.
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        height: f64,
        baseline: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    /// `offset + sum amplitude cos(2 pi k.x + phase)`.
    Modes {
        #[serde(default)]
        offset: f64,
        modes: Vec<ModeSpec>,
    },
    Preset(PresetSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSpec {
    pub kappa: FieldSpec,
    pub eta: FieldSpec,
    pub omega: FieldSpec,
    pub gamma: FieldSpec,
    pub rho0: FieldSpec,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    #[default]
    Uniform,
    Separable {
        source: FieldSpec,
        target: FieldSpec,
    },
    DenseFile {
        path: PathBuf,
        #[serde(default = "default_true")]
        normalize: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtSpec {
    Auto {
        safety: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_dt: Option<f64>,
    },
    Fixed { value: f64 },
}

fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub epsilon: f64,
    pub dt: DtSpec,
    pub t_end: f64,
    pub guard_radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard_m: Option<u32>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub dealias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub epsilons: Vec<f64>,
    pub m_prime: u32,
}

fn default_m_prime() -> u32 {
    3
}

fn default_threshold() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionSpec {
    pub n2: usize,
    #[serde(default = "default_m_prime")]
    pub m_prime: u32,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StudiesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_ladder: Option<LadderSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<ResolutionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    pub grid: GridSpec,
    pub params: ParamsSpec,
    pub fields: FieldsSpec,
    #[serde(default)]
    pub kernel: KernelSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub studies: StudiesSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A validated scenario with its rendered problem.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub base_dir: PathBuf,
    problem: Problem,
}

impl Scenario {
    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    /// Renders the same scenario on `n` points per axis.
    pub fn problem_on(&self, n: usize) -> Result<Problem, ScenarioError> {
        let mut spec = self.spec.clone();
        spec.grid.n = n;
        if matches!(spec.kernel, KernelSpec::DenseFile { .. }) && n != self.spec.grid.n {
            return Err(ScenarioError::schema(
                "kernel",
                "a dense kernel file is tied to its grid and cannot be re-rendered",
            ));
        }
        build_problem(&spec, &self.base_dir)
    }

    pub fn guard_m(&self) -> u32 {
        self.problem.config.guard_m
    }
}

/// Decodes a sidecar of `n_points^2` little-endian `f64` values.
pub fn decode_kernel_sidecar(bytes: &[u8], n_points: usize) -> Result<Vec<f64>, String> {
    let expected = n_points
        .checked_mul(n_points)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| format!("{n_points} points overflow the sidecar size"))?;
    if bytes.len() != expected {
        return Err(format!(
            "expected {expected} bytes ({n_points}^2 f64 values), found {}",
            bytes.len()
        ));
    }
    bytes
        .chunks_exact(8)
        .enumerate()
        .map(|(i, c)| {
            let v = f64::from_le_bytes(c.try_into().expect("chunk of 8"));
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("entry {i} is not finite"))
            }
        })
        .collect()
}

pub fn encode_kernel_sidecar(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Parses `"0.2, 0.1,0.05"` into finite nonnegative values.
pub fn parse_epsilon_list(text: &str) -> Result<Vec<f64>, String> {
    let out: Vec<f64> = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(format!("epsilon `{s}` must be finite and >= 0"))
            }
        })
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("empty epsilon list".into());
    }
    Ok(out)
}

fn grid_of(spec: &GridSpec) -> Result<TorusGrid, ScenarioError> {
    TorusGrid::new(spec.dim, spec.n).map_err(|e| ScenarioError::schema("grid", e.to_string()))
}

fn render(spec: &FieldSpec, grid: TorusGrid, name: &str) -> Result<GridField, ScenarioError> {
    render_field(spec, grid).map_err(|message| ScenarioError::Render {
        field: name.into(),
        message,
    })
}

fn build_kernel(spec: &KernelSpec, grid: TorusGrid, base_dir: &Path) -> Result<TransferKernel, ScenarioError> {
    let tau = |e: ModelError| ScenarioError::constraint("tau", e);
    match spec {
        KernelSpec::Uniform => Ok(TransferKernel::uniform(grid)),
        KernelSpec::Separable { source, target } => {
            let source = render(source, grid, "kernel.source")?;
            let target = render(target, grid, "kernel.target")?;
            kernel_normalize(&RawKernel::Separable { source, target }, grid).map_err(tau)
        }
        KernelSpec::DenseFile { path, normalize } => {
            let full = base_dir.join(path);
            let bytes = std::fs::read(&full).map_err(|source| ScenarioError::Io {
                path: full.clone(),
                source,
            })?;
            let values = decode_kernel_sidecar(&bytes, grid.len()).map_err(|message| ScenarioError::Sidecar {
                path: full.clone(),
                message,
            })?;
            let raw = RawKernel::Dense { grid, values };
            if *normalize {
                kernel_normalize(&raw, grid).map_err(tau)
            } else {
                TransferKernel::from_normalized(&raw, grid).map_err(tau)
            }
        }
    }
}

fn solver_config(spec: &SolverSpec, dim: usize) -> Result<SolverConfig, ScenarioError> {
    let config = SolverConfig {
        epsilon: spec.epsilon,
        dt_policy: match spec.dt {
            DtSpec::Auto { safety, max_dt } => DtPolicy::Auto { safety, max_dt },
            DtSpec::Fixed { value } => DtPolicy::Fixed(value),
        },
        t_end: spec.t_end,
        guard_radius: spec.guard_radius,
        guard_m: spec.guard_m.unwrap_or_else(|| SolverConfig::default_guard_m(dim)),
        record_every: spec.record_every,
    };
    config
        .validate()
        .map_err(|e| ScenarioError::schema("solver", e.to_string()))?;
    Ok(config)
}

fn build_problem(spec: &ScenarioSpec, base_dir: &Path) -> Result<Problem, ScenarioError> {
    if spec.schema_version != SCHEMA_VERSION {
        return Err(ScenarioError::Version(spec.schema_version));
    }
    let grid = grid_of(&spec.grid)?;
    let p = &spec.params;
    let params = ModelParams::new(p.delta, p.u_plus, p.u_minus, p.rho_tilde).map_err(|e| {
        let field = match &e {
            ModelError::Constraint { rule, .. } => format!("params.{}", rule.subject()),
            _ => "params".into(),
        };
        ScenarioError::constraint(&field, e)
    })?;
    let f = &spec.fields;
    let kappa = render(&f.kappa, grid, "kappa")?;
    let eta = render(&f.eta, grid, "eta")?;
    let omega = render(&f.omega, grid, "omega")?;
    let gamma = render(&f.gamma, grid, "gamma")?;
    let rho0 = render(&f.rho0, grid, "rho0")?;
    let tau = build_kernel(&spec.kernel, grid, base_dir)?;
    let data = ModelData::new(params, kappa, eta, omega, gamma, tau)
        .map_err(|e| {
            let field = match &e {
                ModelError::Constraint { rule, .. } => rule.subject().to_string(),
                _ => "fields".into(),
            };
            ScenarioError::constraint(&field, e)
        })?
        .with_dealiasing(spec.solver.dealias);
    if let Some((i, v)) = rho0.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(ScenarioError::constraint(
            "rho0",
            violation(
                ValidationRule::InitialDensityPositive,
                format!("value {v} at grid index {i}, need rho0 > 0"),
            ),
        ));
    }
    let config = solver_config(&spec.solver, grid.dim())?;
    let norm = sobolev_norm(&forward_transform(&rho0), config.guard_m);
    if !(config.guard_radius > norm) {
        return Err(ScenarioError::CrossValidation(format!(
            "guard radius K = {} must exceed ||rho0||_H^{} = {norm:e}",
            config.guard_radius, config.guard_m
        )));
    }
    Ok(Problem { data, rho0, config })
}

fn locate(err: &serde_json::Error) -> ScenarioError {
    ScenarioError::Parse {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Parses, schema-checks and validates a scenario; relative sidecar paths
/// resolve against `base_dir`.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    use serde_json::error::Category;
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: ScenarioSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            Category::Data => ScenarioError::Schema {
                path,
                message: inner.to_string(),
            },
            _ => locate(&inner),
        }
    })?;
    let problem = build_problem(&spec, base_dir)?;
    Ok(Scenario {
        spec,
        base_dir: base_dir.to_path_buf(),
        problem,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, &base)
}

pub fn scenario_to_json(spec: &ScenarioSpec) -> String {
    serde_json::to_string_pretty(spec).expect("scenario specs always serialize")
}

pub fn save_scenario(spec: &ScenarioSpec, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, scenario_to_json(spec) + "\n").map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}
