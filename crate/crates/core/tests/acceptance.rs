//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use torus_pde::analysis::{
    certify_energy, energy_inequality_ratio, envelope, epsilon_ladder_study, existence_horizon,
    lower_bound_audit, mass_audit, mollifier_lemma_suite, uniqueness_consistency, EnergyTrace, EnvelopeParams,
};
use torus_pde::integrator::{integrate, DtPolicy, Problem, Trajectory};
use torus_pde::rhs::{flux_laplacian_direct, flux_laplacian_expanded, rhs_regularized};
use torus_pde::scenario::{parse_scenario, Scenario};
use torus_pde::spectral::{forward_transform, inverse_transform};
use torus_pde::TorusGrid;

struct Outcome {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn scenario(v: &Value) -> Scenario {
    parse_scenario(&v.to_string(), Path::new(".")).expect("acceptance scenarios are valid")
}

fn constant(c: f64) -> Value {
    json!({"type": "constant", "value": c})
}

fn modes(offset: f64, list: &[(i64, f64, f64)]) -> Value {
    let modes: Vec<Value> = list
        .iter()
        .map(|(k, a, p)| json!({"k": [k], "amplitude": a, "phase": p}))
        .collect();
    json!({"type": "modes", "offset": offset, "modes": modes})
}

fn base(n: usize, eps: f64, t_end: f64) -> Value {
    json!({
        "schema_version": 1,
        "grid": {"dim": 1, "n": n},
        "params": {"delta": 0.05, "u_plus": 0.8, "u_minus": 0.3, "rho_tilde": 1.5},
        "fields": {
            "kappa": modes(0.5, &[(1, 0.2, 0.3), (2, 0.1, 1.1)]),
            "eta": modes(0.2, &[(1, 0.05, 0.7)]),
            "omega": modes(0.15, &[(3, 0.05, 0.2)]),
            "gamma": modes(0.3, &[(1, 0.1, 2.0), (2, 0.05, 0.4)]),
            "rho0": modes(1.2, &[(1, 0.2, 0.0), (2, 0.05, 1.3)])
        },
        "kernel": {
            "type": "separable",
            "source": modes(1.0, &[(1, 0.3, 0.5)]),
            "target": modes(1.0, &[(2, 0.4, 0.1)])
        },
        "solver": {"epsilon": eps, "dt": {"type": "auto", "safety": 0.8, "max_dt": 0.01}, "t_end": t_end, "guard_radius": 1e8}
    })
}

fn run(p: &Problem) -> Trajectory {
    let traj = integrate(p).expect("valid problem");
    assert!(traj.is_completed(), "acceptance run stopped: {:?}", traj.status);
    traj
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let a = mollifier_lemma_suite(TorusGrid::new(1, 256).unwrap(), 5, 2, 100, 1).unwrap();
    let b = mollifier_lemma_suite(TorusGrid::new(2, 64).unwrap(), 5, 2, 100, 1).unwrap();
    let elapsed = start.elapsed();
    let mut failed: Vec<String> = a
        .items
        .iter()
        .chain(&b.items)
        .filter(|i| !i.passed())
        .map(|i| format!("{} = {:e} > {:e}", i.name, i.value, i.tolerance))
        .collect();
    if elapsed > Duration::from_secs(30) {
        failed.push(format!("runtime {elapsed:?}"));
    }
    let worst = |name: &str| {
        a.items
            .iter()
            .chain(&b.items)
            .filter(|i| i.name == name)
            .map(|i| i.value)
            .fold(0.0, f64::max)
    };
    Outcome {
        id: 1,
        title: "mollifier properties",
        passed: failed.is_empty(),
        detail: format!(
            "rate {:.6}, scaling {:.3}, {:?}{}",
            worst("mollifier-rate"),
            worst("mollifier-scaling"),
            elapsed,
            if failed.is_empty() { String::new() } else { format!("; {}", failed.join("; ")) }
        ),
    }
}

fn criterion_2() -> Outcome {
    let p1 = EnvelopeParams::new(0.25, 1.0, 3).unwrap();
    let p2 = EnvelopeParams::new(4.0, 1.0, 2).unwrap();
    let p3 = EnvelopeParams::new(1.0, 1.0, 4).unwrap();
    let errs = [
        (existence_horizon(&p1) - 0.25).abs(),
        (envelope(&p1, 0.25).unwrap() - 1.0).abs(),
        (existence_horizon(&p2) - 1.0 / 24.0).abs(),
        (envelope(&p2, 0.0).unwrap() - 4.0).abs(),
        (existence_horizon(&p3) - 0.2).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    Outcome {
        id: 2,
        title: "envelope arithmetic",
        passed: worst <= 1e-12,
        detail: format!("max error {worst:e}"),
    }
}

fn criterion_3(runs: &mut Vec<(String, Scenario, Trajectory)>) -> Outcome {
    let start = Instant::now();
    let mut v = base(128, 0.05, 0.5);
    v["fields"]["eta"] = constant(0.0);
    v["fields"]["omega"] = constant(0.0);
    let closed = scenario(&v);
    let traj = run(closed.problem());
    let drift = mass_audit(&traj, &closed.problem().data).unwrap().relative_drift;
    runs.push(("closed".into(), closed, traj));

    let eta = 0.3;
    v["fields"]["eta"] = constant(eta);
    let fed = scenario(&v);
    let traj = run(fed.problem());
    let m0 = traj.records[0].diagnostics.mass;
    let residual = traj
        .records
        .iter()
        .map(|r| (r.diagnostics.mass - m0 - eta * r.t).abs())
        .fold(0.0, f64::max);
    runs.push(("fed".into(), fed, traj));
    let elapsed = start.elapsed();
    Outcome {
        id: 3,
        title: "mass balance",
        passed: drift <= 1e-8 && residual <= 1e-6 && elapsed < Duration::from_secs(60),
        detail: format!("relative drift {drift:e}, linear-growth residual {residual:e}, {elapsed:?}"),
    }
}

fn criterion_4(runs: &mut Vec<(String, Scenario, Trajectory)>) -> Outcome {
    let mut worst_rhs = 0.0_f64;
    let mut worst_dev = 0.0_f64;
    for eps in [0.0, 0.05] {
        let (rho, omega) = (1.7, 0.2);
        let mut v = base(64, eps, 0.5);
        v["fields"]["rho0"] = constant(rho);
        v["fields"]["omega"] = constant(omega);
        v["fields"]["eta"] = constant(omega * rho);
        v["fields"]["kappa"] = constant(0.6);
        v["fields"]["gamma"] = constant(0.4);
        v["kernel"] = json!({"type": "uniform"});
        let s = scenario(&v);
        let p = s.problem();
        let rhs = rhs_regularized(&forward_transform(&p.rho0), eps, &p.data).unwrap();
        worst_rhs = worst_rhs.max(inverse_transform(&rhs).unwrap().sup_norm());
        let traj = run(p);
        for r in &traj.records {
            let g = inverse_transform(&r.rho).unwrap();
            worst_dev = worst_dev.max(g.values().iter().map(|x| (x - rho).abs()).fold(0.0, f64::max));
        }
        runs.push((format!("steady eps={eps}"), s, traj));
    }
    Outcome {
        id: 4,
        title: "steady state",
        passed: worst_rhs <= 1e-12 && worst_dev <= 1e-12,
        detail: format!("sup |rhs| {worst_rhs:e}, max deviation {worst_dev:e}"),
    }
}

fn random_modes(rng: &mut ChaCha8Rng, offset: f64, amp: f64) -> Value {
    let list: Vec<(i64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(1..=4),
                rng.gen_range(0.0..amp / 3.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    modes(offset, &list)
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0_f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = base(256, 0.0, 0.1);
        v["params"] = json!({
            "delta": rng.gen_range(0.01..0.2),
            "u_plus": rng.gen_range(0.6..0.95),
            "u_minus": rng.gen_range(0.1..0.5),
            "rho_tilde": rng.gen_range(0.5..3.0)
        });
        v["fields"]["kappa"] = random_modes(&mut rng, 0.5, 0.45);
        v["fields"]["rho0"] = random_modes(&mut rng, 1.5, 0.9);
        let s = scenario(&v);
        let p = s.problem();
        let direct = inverse_transform(&flux_laplacian_direct(&p.rho0, &p.data).unwrap()).unwrap();
        let expanded = flux_laplacian_expanded(&forward_transform(&p.rho0), &p.data).unwrap();
        let diff = direct.zip_with(&expanded, |a, b| a - b).unwrap();
        worst = worst.max(diff.l2_norm() / direct.l2_norm());
    }
    Outcome {
        id: 5,
        title: "direct and expanded flux Laplacian",
        passed: worst <= 1e-8,
        detail: format!("max relative gap {worst:e} over 20 scenarios"),
    }
}

fn criterion_6(runs: &mut Vec<(String, Scenario, Trajectory)>) -> Outcome {
    let s = scenario(&base(64, 0.05, 0.5));
    let p = s.problem();
    let dt0 = p.step_size().0 * 4.0;
    let finals: Vec<Trajectory> = [dt0, dt0 / 2.0, dt0 / 4.0]
        .iter()
        .map(|&dt| {
            let mut q = p.clone();
            q.config.dt_policy = DtPolicy::Fixed(dt);
            run(&q)
        })
        .collect();
    let gap = |a: &Trajectory, b: &Trajectory| a.last().rho.difference(&b.last().rho).unwrap().l2_norm();
    let (e1, e2) = (gap(&finals[0], &finals[1]), gap(&finals[1], &finals[2]));
    let order = (e1 / e2).log2();
    runs.push(("rk4 dt/4".into(), s, finals.into_iter().last().unwrap()));
    Outcome {
        id: 6,
        title: "RK4 order",
        passed: (3.7..=4.3).contains(&order),
        detail: format!("observed order {order:.3} (dt = {dt0:e}, gaps {e1:e}, {e2:e})"),
    }
}

/// Smooth data confined to the first harmonic, so the ladder reaches the
/// regime where `1 - e^{-2 eps |k|^2}` is close to linear in eps.
fn ladder_scenario() -> Value {
    let mut v = base(64, 0.05, 0.5);
    v["fields"] = json!({
        "kappa": modes(0.5, &[(1, 0.2, 0.3)]),
        "eta": modes(0.2, &[(1, 0.05, 0.7)]),
        "omega": modes(0.15, &[(1, 0.05, 0.2)]),
        "gamma": modes(0.3, &[(1, 0.1, 2.0)]),
        "rho0": modes(1.0, &[(1, 0.1, 0.0)])
    });
    v["kernel"]["target"] = modes(1.0, &[(1, 0.4, 0.1)]);
    v["solver"]["dt"]["max_dt"] = json!(0.002);
    v
}

fn criterion_7(runs: &mut Vec<(String, Scenario, Trajectory)>) -> Outcome {
    let start = Instant::now();
    let s = scenario(&ladder_scenario());
    let ladder = [0.2, 0.1, 0.05, 0.025];
    let table = epsilon_ladder_study(s.problem(), &ladder, 3).unwrap();
    let elapsed = start.elapsed();
    for eps in ladder {
        let traj = run(&s.problem().with_epsilon(eps));
        runs.push((format!("ladder eps={eps}"), s.clone(), traj));
    }
    let order = table.order.unwrap_or(f64::NAN);
    Outcome {
        id: 7,
        title: "epsilon Cauchy ladder",
        passed: table.strictly_decreasing && order >= 0.8 && elapsed < Duration::from_secs(300),
        detail: format!("differences {:?}, order {order:.3}, {elapsed:?}", table.differences),
    }
}

fn uniqueness_scenario(n: usize) -> Value {
    let mut v = base(n, 0.0, 0.25);
    v["fields"]["rho0"] = modes(1.0, &[(1, 0.3, 0.0), (2, 0.1, 0.5), (3, 0.05, 1.0)]);
    // without it, roundoff near Nyquist times (2 pi k)^3 already exceeds 1e-6
    v["solver"]["dealias"] = json!(true);
    v
}

fn criterion_10(runs: &mut Vec<(String, Scenario, Trajectory)>) -> Outcome {
    let coarse = scenario(&uniqueness_scenario(128));
    let fine = scenario(&uniqueness_scenario(256));
    let report = uniqueness_consistency(coarse.problem(), fine.problem(), 3, 1e-6).unwrap();
    runs.push(("uniqueness n=128".into(), coarse.clone(), run(coarse.problem())));
    Outcome {
        id: 10,
        title: "resolution consistency",
        passed: report.audit.passed(),
        detail: format!("H^3 difference {:e}", report.difference),
    }
}

fn criterion_8(runs: &[(String, Scenario, Trajectory)]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut culprit = String::new();
    for (name, _, traj) in runs {
        let audit = lower_bound_audit(traj, None, 1e-6);
        if audit.worst_margin < worst {
            worst = audit.worst_margin;
            culprit = name.clone();
        }
    }
    Outcome {
        id: 8,
        title: "lower-bound certificate",
        passed: worst >= -1e-6,
        detail: format!("worst margin {worst:e} ({culprit}) over {} runs", runs.len()),
    }
}

fn c_hat(traj: &Trajectory) -> f64 {
    let trace = EnergyTrace::from_trajectory(traj, traj.guard_m).unwrap();
    energy_inequality_ratio(&trace, traj.guard_m).unwrap()
}

fn criterion_9(runs: &[(String, Scenario, Trajectory)]) -> Outcome {
    let mut problems = Vec::new();
    let mut worst_ratio = 0.0_f64;
    let mut worst_change = 0.0_f64;
    for (name, s, traj) in runs {
        let m = traj.guard_m;
        let trace = EnergyTrace::from_trajectory(traj, m).unwrap();
        let c = energy_inequality_ratio(&trace, m).unwrap();
        let cert = certify_energy(&trace, c, 0.1).unwrap_or_else(|e| panic!("{name}: C_hat {c:e}: {e}"));
        worst_ratio = worst_ratio.max(cert.worst_ratio);
        if !cert.passed {
            problems.push(format!("{name}: envelope exceeded ({:e})", cert.worst_ratio));
        }
        // refinement: same data on the doubled grid, with its own stable step
        let mut fine = s.problem_on(2 * s.problem().data.grid().n()).unwrap();
        fine.config.epsilon = traj.epsilon;
        let c_fine = c_hat(&run(&fine));
        let change = if c == 0.0 && c_fine == 0.0 { 0.0 } else { (c_fine - c).abs() / c.max(c_fine) };
        worst_change = worst_change.max(change);
        if change >= 0.2 {
            problems.push(format!("{name}: C_hat {c:e} -> {c_fine:e}"));
        }
    }
    Outcome {
        id: 9,
        title: "energy certification",
        passed: problems.is_empty(),
        detail: format!(
            "max E/envelope {worst_ratio:.4}, max C_hat change {:.2}% over {} runs{}",
            100.0 * worst_change,
            runs.len(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    }
}

fn main() {
    let mut runs = Vec::new();
    let mut outcomes = vec![criterion_1(), criterion_2()];
    outcomes.push(criterion_3(&mut runs));
    outcomes.push(criterion_4(&mut runs));
    outcomes.push(criterion_5());
    outcomes.push(criterion_6(&mut runs));
    outcomes.push(criterion_7(&mut runs));
    let tenth = criterion_10(&mut runs);
    outcomes.push(criterion_8(&runs));
    outcomes.push(criterion_9(&runs));
    outcomes.push(tenth);

    for o in &outcomes {
        println!(
            "criterion {:>2} {:<36} {}  {}",
            o.id,
            o.title,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
