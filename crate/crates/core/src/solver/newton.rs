use nalgebra::{DMatrix, DVector};

use super::{invariant_parity, solver_instance, Method, Parity, Provenance, Solution, SolverOptions};
use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::frac_ops::composite_operator;
use crate::grid::GridFunction;
use crate::model::ProblemInstance;

/// Nodes carried by the reduced unknowns, and how they map back.
struct Reduction {
    nodes: Vec<usize>,
    parity: Option<Parity>,
    len: usize,
}

impl Reduction {
    fn new(len: usize, parity: Option<Parity>) -> Self {
        let nodes = match parity {
            None => (0..len).collect(),
            Some(Parity::Even) => (0..=len / 2).collect(),
            // odd functions vanish at the two fixed points 0 and N/2
            Some(Parity::Odd) => (1..len / 2).collect(),
        };
        Reduction { nodes, parity, len }
    }

    fn partner(&self, k: usize) -> Option<usize> {
        let p = (self.len - k) % self.len;
        (self.parity.is_some() && p != k).then_some(p)
    }

    fn sign(&self) -> f64 {
        self.parity.map_or(1.0, Parity::sign)
    }

    fn expand(&self, reduced: &DVector<f64>, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.len * dim];
        for (pos, &k) in self.nodes.iter().enumerate() {
            for c in 0..dim {
                let v = reduced[pos * dim + c];
                out[k * dim + c] = v;
                if let Some(p) = self.partner(k) {
                    out[p * dim + c] = self.sign() * v;
                }
            }
        }
        out
    }
}

/// `K + L` on the reduced unknowns, `K` the circulant `F⁻¹|w|^{2α}F`.
fn linear_part(f: &Functional<'_>, red: &Reduction) -> DMatrix<f64> {
    let grid = *f.grid();
    let n = f.dim();
    let len = grid.len();
    let mut delta = vec![0.0; len];
    delta[0] = 1.0;
    let column = composite_operator(
        &GridFunction::new(grid, 1, delta).expect("unit vector"),
        f.instance().alpha,
    );
    let kernel = column.values();
    let m = red.nodes.len() * n;
    let mut mat = DMatrix::zeros(m, m);
    for (pi, &i) in red.nodes.iter().enumerate() {
        for (pj, &j) in red.nodes.iter().enumerate() {
            let mut v = kernel[(i + len - j) % len];
            if let Some(p) = red.partner(j) {
                v += red.sign() * kernel[(i + len - p) % len];
            }
            for c in 0..n {
                mat[(pi * n + c, pj * n + c)] = v;
            }
        }
        let l = f.field_at(i);
        for a in 0..n {
            for b in 0..n {
                mat[(pi * n + a, pi * n + b)] += l[a * n + b];
            }
        }
    }
    mat
}

/// Damped Newton iteration on the strong residual `F(u) = 0`, with the
/// dense Jacobian `K + L − ∇²W(t, u)` and backtracking on `‖F‖`.
///
/// Converges to whichever critical point attracts `u0`, saddles included.
/// When the instance is reflection symmetric and `u0` is even or odd the
/// Jacobian is assembled on that class only, which roughly halves its size.
pub fn newton(inst: &ProblemInstance, u0: &GridFunction, opts: &SolverOptions) -> Result<Solution> {
    opts.validate()?;
    let inst = solver_instance(inst, opts);
    let f = Functional::new(&inst);
    f.check(u0)?;
    let grid = inst.grid;
    let n = inst.dim();
    let parity = invariant_parity(&inst, u0);
    let red = Reduction::new(grid.len(), parity);
    let base = linear_part(&f, &red);
    let mut u = match parity {
        Some(p) => p.project(u0),
        None => u0.clone(),
    };
    let (mut value, mut r) = f.energy_and_residual(&u)?;
    let mut norm = r.l2_norm();
    let mut trace = vec![value];
    let mut iterations = 0;
    let target = 1e-3 * opts.grad_tol;
    let mut hess = vec![0.0; n * n];
    while iterations < opts.newton_max_iters && norm > target {
        let mut jac = base.clone();
        for (pos, &k) in red.nodes.iter().enumerate() {
            inst.potential.hessian(grid.node(k), u.row(k), &mut hess);
            for a in 0..n {
                for b in 0..n {
                    jac[(pos * n + a, pos * n + b)] -= hess[a * n + b];
                }
            }
        }
        let rhs = DVector::from_iterator(
            red.nodes.len() * n,
            red.nodes.iter().flat_map(|&k| r.row(k).iter().map(|v| -v)),
        );
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Linalg("singular Newton Jacobian".into()))?;
        let dir = GridFunction::new(grid, n, red.expand(&step, n))?;
        let mut s = 1.0;
        let mut accepted = None;
        while s >= 1e-6 {
            let mut trial = u.add_scaled(s, &dir)?;
            if let Some(p) = parity {
                trial = p.project(&trial);
            }
            let (tv, tr) = f.energy_and_residual(&trial)?;
            let tn = tr.l2_norm();
            if tn <= (1.0 - opts.armijo * s) * norm {
                accepted = Some((trial, tv, tr, tn));
                break;
            }
            s *= opts.backtrack;
        }
        let Some((trial, tv, tr, tn)) = accepted else {
            break;
        };
        u = trial;
        value = tv;
        r = tr;
        norm = tn;
        trace.push(value);
        iterations += 1;
    }
    let provenance = Provenance {
        initializer: "user".into(),
        method: Method::Newton,
        seed: opts.seed,
        merged: Vec::new(),
    };
    Solution::assemble(&f, u, iterations, opts.grad_tol, provenance, trace)
}
