use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::ReportBundle;
use crate::integrator::Trajectory;
use crate::spectral::inverse_transform;

pub const TIMESERIES_HEADER: &str = "t,mass,min_rho,max_rho,energy_m,sup_rhs,dt";

#[derive(Debug, Error)]
#[error("{}: {source}", path.display())]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    std::fs::write(path, contents).map_err(|source| OutputError {
        path: path.to_path_buf(),
        source,
    })
}

// 17 significant digits
fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

pub fn timeseries_csv(traj: &Trajectory) -> String {
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for r in &traj.records {
        let d = &r.diagnostics;
        for (i, v) in [r.t, d.mass, d.min_rho, d.max_rho, d.energy, d.sup_rhs, r.dt].into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            num(&mut out, v);
        }
        out.push('\n');
    }
    out
}

pub fn write_timeseries(traj: &Trajectory, path: &Path) -> Result<(), OutputError> {
    write_file(path, &timeseries_csv(traj))
}

fn snapshot_csv(traj: &Trajectory, index: usize) -> String {
    let record = &traj.records[index];
    let grid = *record.rho.grid();
    let rho = inverse_transform(&record.rho).expect("recorded states are real");
    let mut out = String::new();
    for axis in 1..=grid.dim() {
        write!(out, "x{axis},").expect("writing to a String");
    }
    out.push_str("rho\n");
    for (i, v) in rho.values().iter().enumerate() {
        let x = grid.point(i);
        for xi in &x[..grid.dim()] {
            num(&mut out, *xi);
            out.push(',');
        }
        num(&mut out, *v);
        out.push('\n');
    }
    out
}

/// Writes `timeseries.csv` and `snapshot_NNNN.csv` files (when a trajectory
/// is given) and `summary.json` into `dir`, replacing earlier files.
pub fn write_outputs(
    traj: Option<&Trajectory>,
    bundle: &ReportBundle,
    dir: &Path,
    snapshots: bool,
) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    if let Some(traj) = traj {
        let path = dir.join("timeseries.csv");
        write_timeseries(traj, &path)?;
        written.push(path);
        if snapshots {
            for i in 0..traj.records.len() {
                let path = dir.join(format!("snapshot_{i:04}.csv"));
                write_file(&path, &snapshot_csv(traj, i))?;
                written.push(path);
            }
        }
    }
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(bundle).expect("reports always serialize");
    write_file(&path, &(json + "\n"))?;
    written.push(path);
    Ok(written)
}
