use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{minimize, newton, solver_instance, Method, Parity, Solution, SolverOptions};
use crate::energy::{build_basis, BasisSet, Functional};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::model::ProblemInstance;

/// Log-spaced radii `δ ∈ [1e-3, 1e1]` scanned by ray and sphere searches.
pub const RADIUS_GRID: usize = 41;

pub(crate) fn radii() -> Vec<f64> {
    (0..RADIUS_GRID)
        .map(|i| 10f64.powf(-3.0 + 4.0 * i as f64 / (RADIUS_GRID - 1) as f64))
        .collect()
}

/// `argmin_δ I(δ v)` over [`radii`], returned as `(δ, I(δ v))`.
pub fn ray_minimizer(f: &Functional<'_>, v: &GridFunction) -> Result<(f64, f64)> {
    let mut best = (0.0, 0.0);
    for d in radii() {
        let e = f.energy(&v.scaled(d))?.total;
        if e < best.1 {
            best = (d, e);
        }
    }
    Ok(best)
}

/// Outcome of [`multi_solution`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSolution {
    /// Distinct certified solutions, ascending in energy, at most `k`.
    pub solutions: Vec<Solution>,
    pub requested: usize,
    /// Fewer than `requested` distinct solutions were found.
    pub shortfall: bool,
    pub runs: usize,
    pub certified_runs: usize,
}

#[derive(Debug, Clone)]
struct Run {
    label: String,
    method: Method,
    u0: GridFunction,
}

fn initializers(
    f: &Functional<'_>,
    basis: &BasisSet,
    opts: &SolverOptions,
) -> Result<Vec<Run>> {
    let sign = if opts.negate_initializers { -1.0 } else { 1.0 };
    let mut runs = Vec::new();
    for j in 0..basis.len().min(opts.basis_initializers) {
        let e = basis.get(j);
        let (d, _) = ray_minimizer(f, e)?;
        let d = if d == 0.0 { 1.0 } else { d };
        let u0 = e.scaled(sign * d);
        if j == 0 {
            runs.push(Run {
                label: format!("descent from {d:.4e}·e1"),
                method: Method::Descent,
                u0: u0.clone(),
            });
        }
        runs.push(Run {
            label: format!("newton from {d:.4e}·e{}", j + 1),
            method: Method::Newton,
            u0,
        });
    }
    // Random combinations stay inside one reflection class so the reduced
    // Newton system applies; the class alternates between runs.
    let classes: Vec<Vec<usize>> = [Parity::Even, Parity::Odd]
        .iter()
        .map(|p| {
            (0..basis.len().min(opts.basis_initializers))
                .filter(|&j| Parity::detect(basis.get(j)) == Some(*p))
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for r in 0..opts.random_initializers {
        let members = &classes[r % 2];
        if members.is_empty() {
            continue;
        }
        let mut coeffs = vec![0.0; basis.len()];
        for &j in members {
            coeffs[j] = rng.random_range(-1.0..1.0);
        }
        let v = basis.combine(&coeffs);
        let norm = f.inner(&v, &v)?.sqrt();
        if norm == 0.0 {
            continue;
        }
        let v = v.scaled(1.0 / norm);
        let (d, _) = ray_minimizer(f, &v)?;
        let d = if d == 0.0 { 1.0 } else { d };
        runs.push(Run {
            label: format!("newton from random #{} ({})", r + 1, if r % 2 == 0 { "even" } else { "odd" }),
            method: Method::Newton,
            u0: v.scaled(sign * d),
        });
    }
    Ok(runs)
}

/// Flips `u` so that its first coefficient with magnitude above `1e-8`
/// relative to the largest one is positive.
fn sign_normalize(sol: &mut Solution, basis: &BasisSet) -> Result<()> {
    let coeffs = basis.coefficients(&sol.u)?;
    let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if let Some(c) = coeffs.iter().find(|c| c.abs() > 1e-8 * max) {
        if *c < 0.0 {
            sol.u = sol.u.scaled(-1.0);
        }
    }
    Ok(())
}

/// `min(‖u − v‖, ‖u + v‖)` in `X^α`.
pub(crate) fn signed_distance(f: &Functional<'_>, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    let minus = u.sub(v)?;
    let plus = u.add_scaled(1.0, v)?;
    Ok(f.inner(&minus, &minus)?.min(f.inner(&plus, &plus)?).max(0.0).sqrt())
}

/// Up to `k` distinct nontrivial critical points.
///
/// Initializers are the ray minimizers `δ e_j` along the first
/// `basis_initializers` basis directions plus `random_initializers` random
/// combinations. The deepest direction is also run through [`minimize`];
/// every initializer is run through [`newton`]. Runs execute in parallel.
/// Only residual-certified, nontrivial, decayed solutions are kept; they are
/// merged when closer than `deflation_radius` up to sign, ordered by energy,
/// then `X^α` norm, and each is signed so its first significant basis
/// coefficient is positive.
pub fn multi_solution(inst: &ProblemInstance, k: usize, opts: &SolverOptions) -> Result<MultiSolution> {
    opts.validate()?;
    if k == 0 {
        return Err(Error::param("k", "at least one solution must be requested"));
    }
    let smoothed = solver_instance(inst, opts);
    let f = Functional::new(&smoothed);
    let per_coord = opts.basis_initializers.div_ceil(inst.dim()).max(1);
    let basis = build_basis(inst, per_coord)?;
    let runs = initializers(&f, &basis, opts)?;

    let outcomes: Vec<Result<Solution>> = runs
        .par_iter()
        .map(|run| {
            let mut sol = match run.method {
                Method::Descent => minimize(inst, &run.u0, opts)?,
                Method::Newton => newton(inst, &run.u0, opts)?,
            };
            sol.provenance.initializer = run.label.clone();
            Ok(sol)
        })
        .collect();

    let mut certified = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(sol) if sol.is_certified(opts.grad_tol) => certified.push(sol),
            Ok(_) | Err(Error::Linalg(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let certified_runs = certified.len();
    for sol in &mut certified {
        sign_normalize(sol, &basis)?;
    }
    certified.sort_by(|a, b| {
        a.energy
            .total
            .total_cmp(&b.energy.total)
            .then(a.xalpha_norm.total_cmp(&b.xalpha_norm))
            .then(a.provenance.initializer.cmp(&b.provenance.initializer))
    });

    let mut distinct: Vec<Solution> = Vec::new();
    for sol in certified {
        let mut duplicate_of = None;
        for (i, kept) in distinct.iter().enumerate() {
            if signed_distance(&f, &kept.u, &sol.u)? <= opts.deflation_radius {
                duplicate_of = Some(i);
                break;
            }
        }
        match duplicate_of {
            Some(i) => distinct[i].provenance.merged.push(sol.provenance.initializer),
            None => distinct.push(sol),
        }
    }
    distinct.truncate(k);
    Ok(MultiSolution {
        shortfall: distinct.len() < k,
        solutions: distinct,
        requested: k,
        runs: runs.len(),
        certified_runs,
    })
}
