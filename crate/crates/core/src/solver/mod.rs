//! Critical-point search for the discrete action functional.
//!
//! [`minimize`] is a preconditioned steepest descent that only ever goes
//! downhill, so it finds minimizers. Higher critical points of an even
//! functional are saddles; [`newton`] finds those by driving the residual
//! to zero from a seeded guess. [`multi_solution`] combines both and keeps
//! whatever survives the residual certificate.

mod minimax;
mod multi;
mod newton;

pub use minimax::{coercivity_radius, estimate_cj, estimate_levels, CoercivityRadius, MinimaxEstimate, SpherePoint};
pub use multi::{multi_solution, ray_minimizer, MultiSolution, RADIUS_GRID};
pub use newton::newton;

use serde::{Deserialize, Serialize};

use crate::energy::{EnergyBreakdown, Functional};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::model::ProblemInstance;

/// Solutions with at most this much relative `L²` mass in `|t| > 0.8T` are
/// considered resolved by the truncated line.
pub const TAIL_LIMIT: f64 = 1e-6;

/// Below this `X^α` norm a critical point counts as the trivial one.
pub const NONTRIVIAL_NORM: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub newton_max_iters: usize,
    /// Threshold on the `L²` norm of the strong residual.
    pub grad_tol: f64,
    pub backtrack: f64,
    pub armijo: f64,
    /// Separation `δ_sep` between distinct solutions, in `X^α`.
    pub deflation_radius: f64,
    /// Regularization `ε` applied to the potential during the solve.
    pub smoothing: f64,
    pub seed: u64,
    /// Precondition descent with `(|w|^{2α} + inf l)^{-1}`.
    pub precondition: bool,
    /// Number of basis directions `e_j` used as initializers.
    pub basis_initializers: usize,
    /// Number of random subspace combinations used as initializers.
    pub random_initializers: usize,
    /// Replace every initializer `u0` by `-u0`.
    pub negate_initializers: bool,
    /// Random restarts per sphere in the minimax estimate.
    pub sphere_restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 20_000,
            newton_max_iters: 60,
            grad_tol: 1e-6,
            backtrack: 0.5,
            armijo: 1e-4,
            deflation_radius: 1e-3,
            smoothing: 1e-9,
            seed: 0,
            precondition: true,
            basis_initializers: 8,
            random_initializers: 4,
            negate_initializers: false,
            sphere_restarts: 32,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.grad_tol) {
            return Err(Error::param("grad_tol", "must be positive"));
        }
        if !positive(self.armijo) || self.armijo >= 1.0 {
            return Err(Error::param("armijo", "must lie in (0, 1)"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::param("backtrack", "must lie in (0, 1)"));
        }
        if !positive(self.deflation_radius) {
            return Err(Error::param("deflation_radius", "must be positive"));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::param("smoothing", "must be finite and nonnegative"));
        }
        if self.max_iters == 0 || self.newton_max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if self.sphere_restarts < 32 {
            return Err(Error::param("sphere_restarts", "at least 32 restarts are required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Descent,
    Newton,
}

/// Where a solution came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub initializer: String,
    pub method: Method,
    pub seed: u64,
    /// Labels of other runs that converged to the same solution up to sign.
    pub merged: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: GridFunction,
    pub energy: EnergyBreakdown,
    pub residual_norm: f64,
    pub xalpha_norm: f64,
    pub tail_mass: f64,
    pub iterations: usize,
    pub converged: bool,
    pub provenance: Provenance,
    /// `I` after every accepted iteration, starting with `I(u0)`.
    pub trace: Vec<f64>,
}

impl Solution {
    pub fn is_nontrivial(&self) -> bool {
        self.xalpha_norm > NONTRIVIAL_NORM
    }

    /// Converged, nontrivial and resolved on the grid.
    pub fn is_certified(&self, grad_tol: f64) -> bool {
        self.converged && self.residual_norm <= grad_tol && self.is_nontrivial() && self.tail_mass <= TAIL_LIMIT
    }

    pub(crate) fn assemble(
        f: &Functional<'_>,
        u: GridFunction,
        iterations: usize,
        grad_tol: f64,
        provenance: Provenance,
        trace: Vec<f64>,
    ) -> Result<Solution> {
        let energy = f.energy(&u)?;
        let residual_norm = f.residual(&u)?.l2_norm();
        let xalpha_norm = f.inner(&u, &u)?.max(0.0).sqrt();
        Ok(Solution {
            tail_mass: u.tail_mass(),
            converged: residual_norm <= grad_tol,
            u,
            energy,
            residual_norm,
            xalpha_norm,
            iterations,
            provenance,
            trace,
        })
    }
}

/// Reflection class of a grid function under `t ↦ -t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    /// `(u ± Ru)/2`, exactly in the class.
    pub fn project(self, u: &GridFunction) -> GridFunction {
        let r = u.reflected();
        let s = self.sign();
        let values = u.values().iter().zip(r.values()).map(|(a, b)| 0.5 * (a + s * b)).collect();
        GridFunction::new(*u.grid(), u.dim(), values).expect("projection of finite data")
    }

    /// The class `u` belongs to, up to relative `1e-10`.
    pub fn detect(u: &GridFunction) -> Option<Parity> {
        let norm = u.l2_norm();
        if norm == 0.0 {
            return None;
        }
        let r = u.reflected();
        [Parity::Even, Parity::Odd].into_iter().find(|p| {
            let s = p.sign();
            let gap: f64 = u
                .values()
                .iter()
                .zip(r.values())
                .map(|(a, b)| (a - s * b).powi(2))
                .sum::<f64>()
                .sqrt()
                * u.grid().spacing().sqrt();
            gap <= 1e-10 * norm
        })
    }
}

/// Parity class to enforce along an iteration, if the instance allows it.
pub(crate) fn invariant_parity(inst: &ProblemInstance, u0: &GridFunction) -> Option<Parity> {
    if inst.is_reflection_symmetric() {
        Parity::detect(u0)
    } else {
        None
    }
}

pub(crate) fn solver_instance(inst: &ProblemInstance, opts: &SolverOptions) -> ProblemInstance {
    inst.clone().with_smoothing(opts.smoothing)
}

/// Preconditioned steepest descent with Armijo backtracking on `I`.
///
/// Iterates `u ← u − s P r` where `r` is the strong residual and
/// `P = (|w|^{2α} + inf l)^{-1}` (identity when preconditioning is off).
/// If the instance is reflection symmetric and `u0` is even or odd, every
/// iterate is projected back onto that class. Runs that hit `max_iters`
/// come back with `converged = false`.
pub fn minimize(inst: &ProblemInstance, u0: &GridFunction, opts: &SolverOptions) -> Result<Solution> {
    opts.validate()?;
    let inst = solver_instance(inst, opts);
    let f = Functional::new(&inst);
    f.check(u0)?;
    let parity = invariant_parity(&inst, u0);
    let mut u = match parity {
        Some(p) => p.project(u0),
        None => u0.clone(),
    };
    let shift = inst.inf_lower_bound();
    let (mut value, mut r) = f.energy_and_residual(&u)?;
    let mut trace = vec![value];
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let provenance = Provenance {
        initializer: "user".into(),
        method: Method::Descent,
        seed: opts.seed,
        merged: Vec::new(),
    };
    while iterations < opts.max_iters && r.l2_norm() > opts.grad_tol {
        let dir = if opts.precondition {
            f.precondition(&r, shift)
        } else {
            r.clone()
        };
        let slope = r.l2_inner(&dir)?;
        if !(slope > 0.0) {
            break;
        }
        let mut s = (2.0 * step).min(1e3);
        let mut accepted = None;
        for _ in 0..80 {
            let mut trial = u.add_scaled(-s, &dir)?;
            if let Some(p) = parity {
                trial = p.project(&trial);
            }
            let (tv, tr) = f.energy_and_residual(&trial)?;
            if tv <= value - opts.armijo * s * slope {
                accepted = Some((trial, tv, tr));
                break;
            }
            s *= opts.backtrack;
        }
        let Some((trial, tv, tr)) = accepted else {
            break;
        };
        step = s;
        u = trial;
        value = tv;
        r = tr;
        trace.push(value);
        iterations += 1;
    }
    Solution::assemble(&f, u, iterations, opts.grad_tol, provenance, trace)
}
