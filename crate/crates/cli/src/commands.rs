use std::time::Instant;

use anyhow::{bail, Result};
use frachs_core::energy::{beta_profile, build_basis, Functional};
use frachs_core::model::check_instance;
use frachs_core::solver::{coercivity_radius, estimate_levels, minimize, multi_solution, ray_minimizer};
use frachs_core::SolverOptions;

use crate::config::{sub_seed, ExperimentConfig};
use crate::report::{sanitize_condition, BetaRecord, LevelRecord, RunReport, SolutionRecord};

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Every requested certificate passed.
    Passed,
    /// A check failed or a solve did not converge.
    Failed,
    /// The solve converged, but to the trivial solution.
    Trivial,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Passed => 0,
            Status::Failed => 2,
            Status::Trivial => 3,
        }
    }
}

pub struct Run {
    pub report: RunReport,
    pub status: Status,
}

fn finish(report: RunReport) -> Run {
    let status = if report.failures.is_empty() { Status::Passed } else { Status::Failed };
    Run { report, status }
}

fn timed<T>(report: &mut RunReport, phase: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    report.timings.insert(phase.into(), start.elapsed().as_secs_f64());
    out
}

fn seeded(cfg: &ExperimentConfig, label: &str) -> SolverOptions {
    SolverOptions {
        seed: sub_seed(cfg.seed, label),
        ..cfg.solver.clone()
    }
}

pub fn check(cfg: &ExperimentConfig) -> Result<Run> {
    let mut report = RunReport::new("check", cfg);
    let all = timed(&mut report, "check", || check_instance(&cfg.instance, &cfg.check.params()));
    report.conditions = all
        .into_iter()
        .filter(|r| cfg.check.conditions.contains(&r.condition))
        .map(sanitize_condition)
        .collect();
    for r in &report.conditions {
        if !r.passed {
            report
                .failures
                .push(format!("{} failed with {} violation(s)", r.condition, r.violations));
        }
    }
    Ok(finish(report))
}

/// Descent from the best multiple of the first basis function.
pub fn solve(cfg: &ExperimentConfig) -> Result<Run> {
    let mut report = RunReport::new("solve", cfg);
    let inst = &cfg.instance;
    let opts = seeded(cfg, "solve");
    let sol = timed(&mut report, "solve", || -> Result<_> {
        let basis = build_basis(inst, 1)?;
        let smoothed = inst.clone().with_smoothing(opts.smoothing);
        let (d, _) = ray_minimizer(&Functional::new(&smoothed), basis.get(0))?;
        let u0 = basis.get(0).scaled(if d == 0.0 { 1.0 } else { d });
        let mut sol = minimize(inst, &u0, &opts)?;
        sol.provenance.initializer = format!("descent from {:.4e}·e1", if d == 0.0 { 1.0 } else { d });
        Ok(sol)
    })?;
    let record = SolutionRecord::new(0, &sol, opts.grad_tol);
    let status = if !sol.converged {
        report.failures.push(format!(
            "not converged after {} iterations (residual {:e})",
            sol.iterations, sol.residual_norm
        ));
        Status::Failed
    } else if !record.nontrivial {
        report
            .failures
            .push(format!("converged to the trivial solution (‖u‖_X = {:e})", sol.xalpha_norm));
        Status::Trivial
    } else if !record.certified {
        report
            .failures
            .push(format!("tail mass {:e} exceeds the resolution limit", sol.tail_mass));
        Status::Failed
    } else {
        Status::Passed
    };
    report.solutions.push(record);
    Ok(Run { report, status })
}

/// `k` distinct solutions, minimax levels `ĉ_1..ĉ_{j_max}` and their
/// lower bounds from the measured `β_j`, `‖b‖` and `τ`.
pub fn multiplicity(cfg: &ExperimentConfig) -> Result<Run> {
    let mut report = RunReport::new("multiplicity", cfg);
    let inst = &cfg.instance;
    let opts = seeded(cfg, "multiplicity");
    let found = timed(&mut report, "solutions", || multi_solution(inst, cfg.k, &opts))?;
    report.solutions = found
        .solutions
        .iter()
        .enumerate()
        .map(|(i, s)| SolutionRecord::new(i, s, opts.grad_tol))
        .collect();
    if found.shortfall {
        report.failures.push(format!(
            "found {} of {} requested distinct solutions ({} of {} runs certified)",
            found.solutions.len(),
            cfg.k,
            found.certified_runs,
            found.runs
        ));
    }
    for s in found.solutions.iter().filter(|s| s.energy.total >= 0.0) {
        report
            .failures
            .push(format!("solution `{}` has I = {:e} ≥ 0", s.provenance.initializer, s.energy.total));
    }

    let basis = timed(&mut report, "basis", || build_basis(inst, cfg.basis_size))?;
    if cfg.j_max > basis.len() {
        bail!("multiplicity.j_max = {} exceeds the basis size {}", cfg.j_max, basis.len());
    }
    let betas = timed(&mut report, "beta", || beta_profile(&basis));
    let coercivity = timed(&mut report, "coercivity", || {
        coercivity_radius(inst, &basis, sub_seed(cfg.seed, "coercivity"))
    })?;
    if !coercivity.verified {
        report.failures.push(format!(
            "I is not positive on the sampled sphere of radius {:e} (min {:e})",
            coercivity.sample_radius, coercivity.min_energy
        ));
    }
    let levels = timed(&mut report, "levels", || {
        estimate_levels(inst, &basis, cfg.j_max, &seeded(cfg, "levels"))
    })?;
    let theta = coercivity.theta;
    for est in levels {
        let beta = betas[est.j - 1];
        let lower_bound = -(beta.powf(theta) / theta) * coercivity.b_norm * coercivity.tau.powf(theta);
        let bound_holds = est.c_hat >= lower_bound;
        if !est.certified {
            report.failures.push(format!("ĉ_{} = {:e} is not negative", est.j, est.c_hat));
        }
        if !bound_holds {
            report
                .failures
                .push(format!("ĉ_{} = {:e} is below its lower bound {:e}", est.j, est.c_hat, lower_bound));
        }
        report.c_hat.push(LevelRecord {
            estimate: est,
            lower_bound,
            bound_holds,
        });
    }
    report.beta = betas
        .iter()
        .take(cfg.j_max)
        .enumerate()
        .map(|(i, &b)| BetaRecord {
            j: i + 1,
            beta: b,
            beta_doubled: None,
            relative_change: None,
        })
        .collect();
    report.coercivity = Some(coercivity);
    Ok(finish(report))
}

/// `β_j` for `j ≤ J/2` with `J = beta.J` basis functions per coordinate,
/// compared against `2J`. The upper half of the profile is dominated by the
/// truncation of the tail span and is not reported.
pub fn beta(cfg: &ExperimentConfig) -> Result<Run> {
    let mut report = RunReport::new("beta", cfg);
    let inst = &cfg.instance;
    let basis = timed(&mut report, "basis", || build_basis(inst, cfg.basis_size))?;
    let betas = timed(&mut report, "beta", || beta_profile(&basis));
    let doubled = timed(&mut report, "beta_doubled", || -> Result<_> {
        Ok(beta_profile(&build_basis(inst, 2 * cfg.basis_size)?))
    })?;
    let reported = basis.len() / 2;
    report.beta = (0..reported)
        .map(|i| {
            let change = (doubled[i] - betas[i]).abs() / betas[i];
            BetaRecord {
                j: i + 1,
                beta: betas[i],
                beta_doubled: Some(doubled[i]),
                relative_change: Some(change),
            }
        })
        .collect();
    for w in report.beta.windows(2) {
        if w[1].beta > w[0].beta {
            report.failures.push(format!("β_{} > β_{}", w[1].j, w[0].j));
        }
    }
    if let (Some(first), Some(last)) = (report.beta.first(), report.beta.last()) {
        if last.beta > first.beta / 2.0 {
            report.failures.push(format!(
                "β_{} = {:e} exceeds β_1/2 = {:e}",
                last.j,
                last.beta,
                first.beta / 2.0
            ));
        }
    }
    let moved: Vec<String> = report
        .beta
        .iter()
        .filter(|b| b.relative_change.is_some_and(|c| c > 0.05))
        .map(|b| b.j.to_string())
        .collect();
    if !moved.is_empty() {
        report
            .failures
            .push(format!("β_j moved by more than 5% under J → 2J for j = {}", moved.join(", ")));
    }
    Ok(finish(report))
}
