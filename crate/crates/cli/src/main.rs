#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use torus_pde::analysis::{
    describe_status, envelope, existence_horizon, mollifier_lemma_suite, AuditReport, EnvelopeParams,
};
use torus_pde::scenario::{
    epsilon_study, load_scenario, parse_epsilon_list, resolution_check, simulate, write_outputs, ReportBundle,
    Scenario,
};
use torus_pde::TorusGrid;

/// Pseudospectral runs and verification studies on the flat torus.
#[derive(Parser, Debug)]
#[command(name = "torus-pde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single run plus audits.
    Simulate {
        scenario: PathBuf,
        /// Defaults to the scenario's `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence ladder over regularization parameters.
    EpsilonStudy {
        scenario: PathBuf,
        /// Comma separated, e.g. `0.2,0.1,0.05,0.025`. Defaults to the
        /// scenario's ladder study.
        #[arg(long, value_parser = parse_epsilons)]
        epsilons: Option<EpsilonList>,
        #[arg(long)]
        m_prime: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mollifier property suite on random band-limited fields. Exit code 0
    /// iff every item passes.
    Verify {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        nu: u32,
        #[arg(long)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Prints energy envelope samples and the existence horizon.
    Envelope {
        #[arg(long)]
        e0: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 11)]
        samples: usize,
    },
    /// Runs the scenario at n and n2 = 2n and compares final states.
    ResolutionCheck {
        scenario: PathBuf,
        #[arg(long)]
        n2: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone)]
struct EpsilonList(Vec<f64>);

fn parse_epsilons(s: &str) -> Result<EpsilonList, String> {
    parse_epsilon_list(s).map(EpsilonList)
}

fn load(path: &Path) -> Result<Scenario> {
    load_scenario(path).with_context(|| format!("loading {}", path.display()))
}

fn out_dir(flag: Option<PathBuf>, scenario: &Scenario) -> Result<PathBuf> {
    match (flag, &scenario.spec.output.dir) {
        (Some(dir), _) => Ok(dir),
        (None, Some(dir)) => Ok(scenario.base_dir.join(dir)),
        (None, None) => bail!("no output directory: pass --out or set output.dir in the scenario"),
    }
}

fn print_audits(audits: &[AuditReport]) {
    for a in audits {
        println!(
            "{:<32} {:<4} value {:e} (tolerance {:e}) {}",
            a.name,
            if a.passed() { "PASS" } else { "FAIL" },
            a.value,
            a.tolerance,
            a.detail
        );
    }
}

fn finish(bundle: &ReportBundle, written: &[PathBuf]) -> ExitCode {
    print_audits(&bundle.audits);
    for p in written {
        println!("wrote {}", p.display());
    }
    if bundle.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { scenario, out } => {
            let s = load(&scenario)?;
            let dir = out_dir(out, &s)?;
            let (traj, bundle) = simulate(&s)?;
            println!("status: {} after {} steps (dt = {:e})", describe_status(&traj.status), traj.steps, traj.dt);
            let written = write_outputs(Some(&traj), &bundle, &dir, s.spec.output.snapshots)?;
            Ok(finish(&bundle, &written))
        }
        Command::EpsilonStudy {
            scenario,
            epsilons,
            m_prime,
            out,
        } => {
            let s = load(&scenario)?;
            let dir = out_dir(out, &s)?;
            let ladder = s.spec.studies.epsilon_ladder.as_ref();
            let Some(epsilons) = epsilons.map(|l| l.0).or_else(|| ladder.map(|l| l.epsilons.clone())) else {
                bail!("no ladder: pass --epsilons or set studies.epsilon_ladder");
            };
            let Some(m_prime) = m_prime.or_else(|| ladder.map(|l| l.m_prime)) else {
                bail!("pass --m-prime or set studies.epsilon_ladder.m_prime");
            };
            let bundle = epsilon_study(&s, &epsilons, m_prime)?;
            if let Some(table) = &bundle.convergence {
                for (pair, d) in table.epsilons.windows(2).zip(&table.differences) {
                    println!("eps {:e} vs {:e}: H^{} difference {:e}", pair[0], pair[1], m_prime, d);
                }
            }
            let written = write_outputs(None, &bundle, &dir, false)?;
            Ok(finish(&bundle, &written))
        }
        Command::Verify {
            dim,
            n,
            m,
            nu,
            seeds,
            seed,
        } => {
            let grid = TorusGrid::new(dim, n)?;
            let report = mollifier_lemma_suite(grid, m, nu, seeds, seed)?;
            println!("{} fields, d = {dim}, n = {n}, m = {m}, nu = {nu}, base seed {seed}", report.fields);
            print_audits(&report.items);
            println!("scaling spread (not judged): {:e}", report.scaling_spread);
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Envelope {
            e0,
            c,
            m,
            t_max,
            samples,
        } => {
            if !(t_max >= 0.0) || samples < 2 {
                bail!("need t_max >= 0 and at least 2 samples");
            }
            let p = EnvelopeParams::new(e0, c, m)?;
            println!("T_E = {:e}", existence_horizon(&p));
            println!("t,envelope");
            for i in 0..samples {
                let t = t_max * i as f64 / (samples - 1) as f64;
                match envelope(&p, t) {
                    Ok(e) => println!("{t:.16e},{e:.16e}"),
                    Err(_) => println!("{t:.16e},inf"),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ResolutionCheck { scenario, n2, out } => {
            let s = load(&scenario)?;
            let dir = out_dir(out, &s)?;
            let n2 = n2
                .or_else(|| s.spec.studies.resolution.as_ref().map(|r| r.n2))
                .context("pass --n2 or set studies.resolution.n2")?;
            let bundle = resolution_check(&s, n2)?;
            let written = write_outputs(None, &bundle, &dir, false)?;
            Ok(finish(&bundle, &written))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
