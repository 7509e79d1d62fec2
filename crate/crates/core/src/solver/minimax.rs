use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::multi::radii;
use super::{solver_instance, SolverOptions};
use crate::energy::{embedding_constant, BasisSet, Functional};
use crate::error::{Error, Result};
use crate::model::{b_norm, ProblemInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    /// Coordinates `λ` with `|λ| = δ`.
    pub lambda: Vec<f64>,
    pub value: f64,
}

/// Upper estimate `ĉ_j = min_δ max_{|λ| = δ} I(Σ λ_i e_i)` of the `j`-th
/// minimax level, relative to the given basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxEstimate {
    pub j: usize,
    pub c_hat: f64,
    pub radius: f64,
    /// `ĉ_j < 0`: the sublevel set below `ĉ_j` contains a `j`-dimensional sphere.
    pub certified: bool,
    pub restarts: usize,
    /// Local maximizers found at the optimal radius, one per start.
    pub certificate: Vec<SpherePoint>,
    /// `(δ, max over the δ-sphere)` for every scanned radius.
    pub profile: Vec<(f64, f64)>,
}

/// Relative size below which a basis value counts as numerically absent.
const SUPPORT_CUTOFF: f64 = 1e-30;

/// Evaluates `G(μ) = ∫ W(t, δ Σ μ_i e_i)` and its gradient on the span.
///
/// Only nodes where some `e_i` exceeds [`SUPPORT_CUTOFF`] times its peak are
/// visited; with `W` growing like `|u|^θ`, the skipped nodes contribute less
/// than `1e-40` relative.
struct SphereProblem<'a> {
    f: &'a Functional<'a>,
    /// `(node, values)` with `values[c·j + i] = e_i(t_node)_c`.
    support: Vec<(usize, Vec<f64>)>,
    j: usize,
}

impl<'a> SphereProblem<'a> {
    fn new(f: &'a Functional<'a>, basis: &BasisSet, j: usize) -> Self {
        let n = f.dim();
        let peaks: Vec<f64> = (0..j).map(|i| basis.get(i).sup_norm()).collect();
        let support = (0..f.grid().len())
            .filter_map(|k| {
                let mut values = vec![0.0; n * j];
                let mut visible = false;
                for i in 0..j {
                    for (c, v) in basis.get(i).row(k).iter().enumerate() {
                        values[c * j + i] = *v;
                        visible |= v.abs() > SUPPORT_CUTOFF * peaks[i];
                    }
                }
                visible.then_some((k, values))
            })
            .collect();
        SphereProblem { f, support, j }
    }

    fn state(&self, values: &[f64], lambda: &[f64], u: &mut [f64]) {
        for (c, o) in u.iter_mut().enumerate() {
            *o = dot(&values[c * self.j..(c + 1) * self.j], lambda);
        }
    }

    fn potential(&self, lambda: &[f64]) -> f64 {
        let grid = self.f.grid();
        let p = &self.f.instance().potential;
        let mut u = vec![0.0; self.f.dim()];
        let mut acc = 0.0;
        for (k, values) in &self.support {
            self.state(values, lambda, &mut u);
            acc += p.value(grid.node(*k), &u);
        }
        acc * grid.spacing()
    }

    fn potential_gradient(&self, lambda: &[f64]) -> Vec<f64> {
        let grid = self.f.grid();
        let n = self.f.dim();
        let p = &self.f.instance().potential;
        let (mut u, mut g) = (vec![0.0; n], vec![0.0; n]);
        let mut out = vec![0.0; self.j];
        for (k, values) in &self.support {
            self.state(values, lambda, &mut u);
            p.gradient(grid.node(*k), &u, &mut g);
            for (c, gc) in g.iter().enumerate() {
                for (o, e) in out.iter_mut().zip(&values[c * self.j..(c + 1) * self.j]) {
                    *o += gc * e;
                }
            }
        }
        let h = grid.spacing();
        out.iter_mut().for_each(|o| *o *= h);
        out
    }

    /// Minimizes `∫W` over `|λ| = δ` from `start` by projected gradient
    /// descent with Barzilai–Borwein trial steps and Armijo backtracking;
    /// returns `(λ, ∫W(λ))`. Stops once the tangential gradient is below
    /// `1e-6` of the full one; the value error is quadratic in that ratio.
    fn descend(&self, start: &[f64], delta: f64) -> (Vec<f64>, f64) {
        let mut lambda = normalized(start, delta);
        let mut value = self.potential(&lambda);
        let mut step = 1.0 / delta;
        let mut last: Option<(Vec<f64>, Vec<f64>)> = None;
        for _ in 0..200 {
            let g = self.potential_gradient(&lambda);
            let radial = dot(&g, &lambda) / (delta * delta);
            let tangent: Vec<f64> = g.iter().zip(&lambda).map(|(gi, li)| gi - radial * li).collect();
            let tn2 = dot(&tangent, &tangent);
            if tn2.sqrt() <= 1e-6 * (dot(&g, &g).sqrt() + 1e-300) {
                break;
            }
            let mut s = match &last {
                Some((dl, dg)) => {
                    let sl: Vec<f64> = lambda.iter().zip(dl).map(|(a, b)| a - b).collect();
                    let sg: Vec<f64> = tangent.iter().zip(dg).map(|(a, b)| a - b).collect();
                    let curv = dot(&sl, &sg);
                    if curv > 0.0 {
                        dot(&sl, &sl) / curv
                    } else {
                        2.0 * step
                    }
                }
                None => step,
            };
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = lambda.iter().zip(&tangent).map(|(l, t)| l - s * t).collect();
                let trial = normalized(&trial, delta);
                let tv = self.potential(&trial);
                if tv <= value - 1e-4 * s * tn2 {
                    moved = tv < value;
                    last = Some((lambda, tangent));
                    lambda = trial;
                    value = tv;
                    break;
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
            step = s;
        }
        (lambda, value)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized(v: &[f64], delta: f64) -> Vec<f64> {
    let n = dot(v, v).sqrt();
    v.iter().map(|x| x * delta / n).collect()
}

/// Best result over `starts`, ties broken by start order.
fn maximize_on_sphere(problem: &SphereProblem<'_>, starts: &[Vec<f64>], delta: f64) -> Vec<SpherePoint> {
    let half = 0.5 * delta * delta;
    starts
        .par_iter()
        .map(|s| {
            let (lambda, w) = problem.descend(s, delta);
            SpherePoint {
                lambda,
                value: half - w,
            }
        })
        .collect()
}

fn best(points: &[SpherePoint]) -> &SpherePoint {
    points
        .iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one start")
}

/// `ĉ_1, …, ĉ_{j_max}`. At each radius the sphere in `span{e_1..e_j}` is
/// searched from `sphere_restarts` random starts, from the level `j − 1`
/// maximizer at the same radius, and from the best point at the previous
/// radius. Because the spheres are nested this makes `ĉ_j` nondecreasing.
pub fn estimate_levels(
    inst: &ProblemInstance,
    basis: &BasisSet,
    j_max: usize,
    opts: &SolverOptions,
) -> Result<Vec<MinimaxEstimate>> {
    opts.validate()?;
    if j_max == 0 || j_max > basis.len() {
        return Err(Error::OutOfRange {
            index: j_max,
            max: basis.len(),
        });
    }
    let smoothed = solver_instance(inst, opts);
    let f = Functional::new(&smoothed);
    let deltas = radii();
    let mut previous: Vec<Vec<SpherePoint>> = Vec::new();
    let mut out = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let problem = SphereProblem::new(&f, basis, j);
        let mut per_radius: Vec<Vec<SpherePoint>> = Vec::with_capacity(deltas.len());
        let mut restarts = 0;
        for (di, &delta) in deltas.iter().enumerate() {
            let points = if j == 1 {
                [1.0, -1.0]
                    .iter()
                    .map(|s| {
                        let lambda = vec![s * delta];
                        SpherePoint {
                            value: 0.5 * delta * delta - problem.potential(&lambda),
                            lambda,
                        }
                    })
                    .collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    opts.seed ^ ((j as u64) << 32) ^ ((di as u64) << 16),
                );
                let mut starts: Vec<Vec<f64>> = (0..opts.sphere_restarts)
                    .map(|_| (0..j).map(|_| StandardNormal.sample(&mut rng)).collect())
                    .collect();
                if let Some(prev) = previous.get(di) {
                    let mut s = best(prev).lambda.clone();
                    s.push(0.0);
                    starts.push(s);
                }
                if let Some(last) = per_radius.last() {
                    starts.push(best(last).lambda.clone());
                }
                maximize_on_sphere(&problem, &starts, delta)
            };
            restarts = points.len();
            per_radius.push(points);
        }
        let profile: Vec<(f64, f64)> = deltas
            .iter()
            .zip(&per_radius)
            .map(|(d, pts)| (*d, best(pts).value))
            .collect();
        let (at, &(radius, c_hat)) = profile
            .iter()
            .enumerate()
            .reduce(|a, b| if b.1 .1 < a.1 .1 { b } else { a })
            .expect("nonempty radius grid");
        out.push(MinimaxEstimate {
            j,
            c_hat,
            radius,
            certified: c_hat < 0.0,
            restarts,
            certificate: per_radius[at].clone(),
            profile,
        });
        previous = per_radius;
    }
    Ok(out)
}

/// The single level `ĉ_j`; see [`estimate_levels`].
pub fn estimate_cj(
    inst: &ProblemInstance,
    basis: &BasisSet,
    j: usize,
    opts: &SolverOptions,
) -> Result<MinimaxEstimate> {
    if j == 0 {
        return Err(Error::OutOfRange {
            index: 0,
            max: basis.len(),
        });
    }
    Ok(estimate_levels(inst, basis, j, opts)?.pop().expect("j ≥ 1 levels"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityRadius {
    /// Positive root of `½ s² = (C₂^θ/θ) ‖b‖ s^θ`.
    pub tau: f64,
    pub embedding_constant: f64,
    pub b_norm: f64,
    pub theta: f64,
    /// `X^α` radius at which positivity was sampled.
    pub sample_radius: f64,
    pub samples: usize,
    pub min_energy: f64,
    pub verified: bool,
}

/// `τ = (2 C₂^θ ‖b‖ / θ)^{1/(2−θ)}` with the measured embedding constant,
/// checked by evaluating `I` at 100 random basis combinations of norm `2τ`
/// (norm 1 when `τ = 0`).
pub fn coercivity_radius(inst: &ProblemInstance, basis: &BasisSet, seed: u64) -> Result<CoercivityRadius> {
    let theta = inst.potential.theta;
    let c2 = embedding_constant(inst)?.constant;
    let bn = b_norm(&inst.potential, &inst.grid);
    let tau = if bn > 0.0 {
        (2.0 * c2.powf(theta) * bn / theta).powf(1.0 / (2.0 - theta))
    } else {
        0.0
    };
    let sample_radius = if tau > 0.0 { 2.0 * tau } else { 1.0 };
    let f = Functional::new(inst);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = 100;
    let mut min_energy = f64::INFINITY;
    for _ in 0..samples {
        let c: Vec<f64> = (0..basis.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c = normalized(&c, sample_radius);
        min_energy = min_energy.min(f.energy(&basis.combine(&c))?.total);
    }
    Ok(CoercivityRadius {
        tau,
        embedding_constant: c2,
        b_norm: bn,
        theta,
        sample_radius,
        samples,
        min_energy,
        verified: min_energy > 0.0,
    })
}
