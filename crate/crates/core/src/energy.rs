//! The Hilbert space `X^α`, the action functional
//! `I(u) = ½‖u‖²_{X^α} − ∫ W(t, u)`, its derivative and strong-form residual,
//! plus the Hermite basis and embedding estimates built on them.
//!
//! All quantities use the periodic spectral discretisation of the grid, so
//! the quadratic part is exactly `h Σ (A u)·u` with
//! `A = F⁻¹ |w|^{2α} F + L(t)`, and the residual reproduces the directional
//! derivative to rounding.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_ops::composite_symbol;
use crate::grid::{forward_transform, inverse_transform, Grid, GridFunction, SpectralFunction};
use crate::model::{MatrixField, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential_l: f64,
    pub potential_w: f64,
    pub total: f64,
    /// `‖u‖²` share beyond `|t| > 0.8T`; large values mean truncation matters.
    pub tail_mass: f64,
}

/// Precomputed pieces of the discrete functional for one instance.
#[derive(Debug, Clone)]
pub struct Functional<'a> {
    inst: &'a ProblemInstance,
    symbol: Vec<f64>,
    field: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Functional<'a> {
    pub fn new(inst: &'a ProblemInstance) -> Self {
        let grid = inst.grid;
        let n = inst.dim();
        let symbol = (0..grid.len())
            .map(|idx| composite_symbol(grid.frequency(idx), inst.alpha))
            .collect();
        let mut field = vec![0.0; grid.len() * n * n];
        for (k, chunk) in field.chunks_mut(n * n).enumerate() {
            inst.field.matrix(grid.node(k), chunk);
        }
        Functional { inst, symbol, field }
    }

    pub fn instance(&self) -> &ProblemInstance {
        self.inst
    }

    pub fn grid(&self) -> &Grid {
        &self.inst.grid
    }

    pub fn dim(&self) -> usize {
        self.inst.dim()
    }

    /// `|w_m|^{2α}` in FFT order.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// `L(t_k)` row-major.
    pub fn field_at(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.field[k * n * n..(k + 1) * n * n]
    }

    pub fn check(&self, u: &GridFunction) -> Result<()> {
        if *u.grid() != self.inst.grid || u.dim() != self.dim() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn kinetic_form(&self, su: &SpectralFunction, sv: &SpectralFunction) -> f64 {
        let n = self.dim();
        let sum: f64 = su
            .coeffs()
            .chunks(n)
            .zip(sv.coeffs().chunks(n))
            .zip(&self.symbol)
            .map(|((a, b), s)| s * a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum::<f64>())
            .sum();
        sum / (2.0 * self.grid().half_width())
    }

    fn field_form(&self, u: &GridFunction, v: &GridFunction) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for k in 0..self.grid().len() {
            let m = self.field_at(k);
            let (uk, vk) = (u.row(k), v.row(k));
            for i in 0..n {
                acc += vk[i] * dot(&m[i * n..(i + 1) * n], uk);
            }
        }
        acc * self.grid().spacing()
    }

    /// `∫ (D^α u, D^α v) + (L u, v)`.
    pub fn inner(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let (su, sv) = (forward_transform(u), forward_transform(v));
        Ok(self.kinetic_form(&su, &sv) + self.field_form(u, v))
    }

    /// `A u = F⁻¹(|w|^{2α} û) + L u`, so that `⟨u, v⟩_{X^α} = h Σ (A u)·v`.
    pub fn apply_linear(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check(u)?;
        let s = forward_transform(u).apply_symbol(|idx| Complex64::new(self.symbol[idx], 0.0));
        let mut out = inverse_transform(&s);
        let n = self.dim();
        let values = out.values_mut();
        for k in 0..self.grid().len() {
            let m = self.field_at(k);
            let uk = u.row(k);
            for i in 0..n {
                values[k * n + i] += dot(&m[i * n..(i + 1) * n], uk);
            }
        }
        Ok(out)
    }

    pub fn energy(&self, u: &GridFunction) -> Result<EnergyBreakdown> {
        self.check(u)?;
        let su = forward_transform(u);
        let kinetic = 0.5 * self.kinetic_form(&su, &su);
        let potential_l = 0.5 * self.field_form(u, u);
        let potential_w = self.potential_integral(u);
        Ok(EnergyBreakdown {
            kinetic,
            potential_l,
            potential_w,
            total: kinetic + potential_l - potential_w,
            tail_mass: u.tail_mass(),
        })
    }

    /// `∫ W(t, u(t)) dt`.
    pub fn potential_integral(&self, u: &GridFunction) -> f64 {
        let grid = self.grid();
        let p = &self.inst.potential;
        (0..grid.len()).map(|k| p.value(grid.node(k), u.row(k))).sum::<f64>() * grid.spacing()
    }

    /// Pointwise `∇W(t_k, u_k)`.
    pub fn potential_gradient(&self, u: &GridFunction) -> GridFunction {
        let grid = self.grid();
        let n = self.dim();
        let p = &self.inst.potential;
        let mut out = vec![0.0; grid.len() * n];
        for (k, chunk) in out.chunks_mut(n).enumerate() {
            p.gradient(grid.node(k), u.row(k), chunk);
        }
        GridFunction::new(*grid, n, out).expect("gradient of finite data is finite")
    }

    /// `ₜD∞^α ₋∞D_t^α u + L u − ∇W(t, u)` at the nodes.
    pub fn residual(&self, u: &GridFunction) -> Result<GridFunction> {
        let au = self.apply_linear(u)?;
        au.sub(&self.potential_gradient(u))
    }

    pub fn directional_derivative(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        self.check(v)?;
        let grad = self.potential_gradient(u);
        Ok(self.inner(u, v)? - grad.l2_inner(v)?)
    }

    /// `I(u)` together with the residual, sharing one transform.
    pub fn energy_and_residual(&self, u: &GridFunction) -> Result<(f64, GridFunction)> {
        let au = self.apply_linear(u)?;
        let quadratic = 0.5 * au.l2_inner(u)?;
        let r = au.sub(&self.potential_gradient(u))?;
        Ok((quadratic - self.potential_integral(u), r))
    }

    /// Solves `(F⁻¹(|w|^{2α} + shift)F) x = r` exactly in Fourier space.
    pub fn precondition(&self, r: &GridFunction, shift: f64) -> GridFunction {
        let s = forward_transform(r).apply_symbol(|idx| Complex64::new(1.0 / (self.symbol[idx] + shift), 0.0));
        inverse_transform(&s)
    }
}

pub fn xalpha_inner(u: &GridFunction, v: &GridFunction, inst: &ProblemInstance) -> Result<f64> {
    Functional::new(inst).inner(u, v)
}

pub fn xalpha_norm(u: &GridFunction, inst: &ProblemInstance) -> Result<f64> {
    Ok(xalpha_inner(u, u, inst)?.max(0.0).sqrt())
}

/// `(‖u‖²_{L²} + ‖|w|^α û‖²)^{1/2}`, the norm of the unweighted space.
pub fn h_alpha_norm(u: &GridFunction, alpha: crate::FracOrder) -> f64 {
    let grid = *u.grid();
    let s = forward_transform(u);
    let semi = s.weighted_energy(|idx| composite_symbol(grid.frequency(idx), alpha));
    (u.l2_norm().powi(2) + semi).sqrt()
}

pub fn energy(u: &GridFunction, inst: &ProblemInstance) -> Result<EnergyBreakdown> {
    Functional::new(inst).energy(u)
}

pub fn directional_derivative(u: &GridFunction, v: &GridFunction, inst: &ProblemInstance) -> Result<f64> {
    Functional::new(inst).directional_derivative(u, v)
}

pub fn residual(u: &GridFunction, inst: &ProblemInstance) -> Result<GridFunction> {
    Functional::new(inst).residual(u)
}

// ---------------------------------------------------------------------------
// Basis
// ---------------------------------------------------------------------------

/// Default Hermite scale `s` in `h_k(t/s)`.
pub const DEFAULT_HERMITE_SCALE: f64 = 1.0;

/// Normalized-Gram determinant below which the raw basis counts as dependent.
pub const GRAM_DET_FLOOR: f64 = 1e-8;

/// Hermite functions `ψ_0..ψ_{count-1}` at `x`, `∫ψ_j ψ_k = δ_jk`.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(cur);
    for k in 0..count - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// `X^α`-orthonormal basis `e_1..e_{J·n}`, together with `A e_j` so that
/// coefficients `⟨u, e_j⟩_{X^α}` cost one dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub functions: Vec<GridFunction>,
    images: Vec<GridFunction>,
    pub per_coordinate: usize,
    pub scale: f64,
    pub gram_log10_det: f64,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn get(&self, j: usize) -> &GridFunction {
        &self.functions[j]
    }

    /// `Σ_j c_j e_j`.
    pub fn combine(&self, coeffs: &[f64]) -> GridFunction {
        let first = &self.functions[0];
        let mut values = vec![0.0; first.values().len()];
        for (c, e) in coeffs.iter().zip(&self.functions) {
            if *c != 0.0 {
                for (v, x) in values.iter_mut().zip(e.values()) {
                    *v += c * x;
                }
            }
        }
        GridFunction::new(*first.grid(), first.dim(), values).expect("finite combination")
    }

    /// `⟨u, e_j⟩_{X^α}` for every `j`.
    pub fn coefficients(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.images.iter().map(|a| a.l2_inner(u)).collect()
    }

    /// `⟨e_i, e_k⟩_{L²}` for `i, k ≥ from` (0-based).
    pub fn l2_gram(&self, from: usize) -> DMatrix<f64> {
        let fs = &self.functions[from..];
        let m = fs.len();
        let mut g = DMatrix::zeros(m, m);
        for i in 0..m {
            for k in i..m {
                let v = fs[i].l2_inner(&fs[k]).expect("basis shares one grid");
                g[(i, k)] = v;
                g[(k, i)] = v;
            }
        }
        g
    }
}

/// Hermite basis with scale [`DEFAULT_HERMITE_SCALE`], `J` functions per
/// coordinate, orthonormalized in `X^α`.
pub fn build_basis(inst: &ProblemInstance, per_coordinate: usize) -> Result<BasisSet> {
    build_basis_scaled(inst, per_coordinate, DEFAULT_HERMITE_SCALE)
}

pub fn build_basis_scaled(inst: &ProblemInstance, per_coordinate: usize, scale: f64) -> Result<BasisSet> {
    let grid = inst.grid;
    let n = inst.dim();
    if per_coordinate == 0 || per_coordinate > grid.len() / 4 {
        return Err(Error::param(
            "J",
            format!("need 1 ≤ J ≤ N/4 = {}, got {per_coordinate}", grid.len() / 4),
        ));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::param("scale", "Hermite scale must be positive"));
    }
    let f = Functional::new(inst);
    let table: Vec<Vec<f64>> = (0..grid.len())
        .map(|k| hermite_functions(grid.node(k) / scale, per_coordinate))
        .collect();

    let mut functions: Vec<GridFunction> = Vec::with_capacity(per_coordinate * n);
    let mut images: Vec<GridFunction> = Vec::with_capacity(per_coordinate * n);
    let mut log_det = 0.0;
    for k in 0..per_coordinate {
        for c in 0..n {
            let mut values = vec![0.0; grid.len() * n];
            for (node, row) in table.iter().enumerate() {
                values[node * n + c] = row[k];
            }
            let mut v = GridFunction::new(grid, n, values)?;
            let mut av = f.apply_linear(&v)?;
            let raw_norm = av.l2_inner(&v)?.sqrt();
            v = v.scaled(1.0 / raw_norm);
            av = av.scaled(1.0 / raw_norm);
            for _ in 0..2 {
                for (e, ae) in functions.iter().zip(&images) {
                    let proj = ae.l2_inner(&v)?;
                    v = v.add_scaled(-proj, e)?;
                    av = av.add_scaled(-proj, ae)?;
                }
            }
            let rest = av.l2_inner(&v)?.max(0.0);
            log_det += rest.log10();
            let index = functions.len() + 1;
            if !(rest > 0.0) || log_det < GRAM_DET_FLOOR.log10() {
                return Err(Error::RankDeficient {
                    index,
                    det: 10f64.powf(log_det),
                });
            }
            let norm = rest.sqrt();
            functions.push(v.scaled(1.0 / norm));
            images.push(av.scaled(1.0 / norm));
        }
    }
    Ok(BasisSet {
        functions,
        images,
        per_coordinate,
        scale,
        gram_log10_det: log_det,
    })
}

/// `sup { ‖u‖_{L²} : u ∈ span{e_j..e_J}, ‖u‖_{X^α} = 1 }` for 1-based `j`.
/// This is a truncated-tail estimate: the true tail space is infinite
/// dimensional, and the value depends on the basis.
pub fn estimate_beta(basis: &BasisSet, j: usize) -> Result<f64> {
    if j == 0 || j > basis.len() {
        return Err(Error::OutOfRange {
            index: j,
            max: basis.len(),
        });
    }
    Ok(largest_eigenvalue(basis.l2_gram(j - 1)).max(0.0).sqrt())
}

/// `β_1..β_J` in one pass over a shared Gram matrix.
pub fn beta_profile(basis: &BasisSet) -> Vec<f64> {
    let full = basis.l2_gram(0);
    let m = full.nrows();
    (0..m)
        .map(|j| {
            let sub = full.view((j, j), (m - j, m - j)).into_owned();
            largest_eigenvalue(sub).max(0.0).sqrt()
        })
        .collect()
}

fn largest_eigenvalue(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    SymmetricEigen::new(m).eigenvalues.max()
}

// ---------------------------------------------------------------------------
// Embedding constant
// ---------------------------------------------------------------------------

/// Result of the `L²` embedding estimate `‖u‖_{L²} ≤ C₂ ‖u‖_{X^α}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingEstimate {
    pub constant: f64,
    pub lambda_min: f64,
    pub extremal: GridFunction,
    pub iterations: usize,
}

/// `C₂ = λ_min(A)^{-1/2}` by inverse iteration, with `A` inverted by
/// preconditioned conjugate gradients.
pub fn embedding_constant(inst: &ProblemInstance) -> Result<EmbeddingEstimate> {
    let f = Functional::new(inst);
    let grid = inst.grid;
    let n = inst.dim();
    let shift = inst.inf_lower_bound();
    let mut x = GridFunction::from_fn(grid, n, |t, out| {
        for (c, o) in out.iter_mut().enumerate() {
            *o = (-(t * t) / (2.0 + c as f64)).exp();
        }
    })?;
    x = x.scaled(1.0 / x.l2_norm());
    let mut lambda = f.inner(&x, &x)?;
    let mut iterations = 0;
    for it in 1..=200 {
        iterations = it;
        let y = conjugate_gradient(&f, &x, shift, 1e-13, 2000)?;
        let y = y.scaled(1.0 / y.l2_norm());
        let next = f.inner(&y, &y)?;
        x = y;
        let done = (lambda - next).abs() <= 1e-13 * next;
        lambda = next;
        if done {
            break;
        }
    }
    Ok(EmbeddingEstimate {
        constant: 1.0 / lambda.sqrt(),
        lambda_min: lambda,
        extremal: x,
        iterations,
    })
}

/// Solves `A y = b` to relative residual `tol`.
pub fn conjugate_gradient(
    f: &Functional<'_>,
    b: &GridFunction,
    shift: f64,
    tol: f64,
    max_iter: usize,
) -> Result<GridFunction> {
    let mut x = GridFunction::zeros(*b.grid(), b.dim());
    let mut r = b.clone();
    let mut z = f.precondition(&r, shift);
    let mut p = z.clone();
    let mut rz = r.l2_inner(&z)?;
    let b_norm = b.l2_norm();
    for _ in 0..max_iter {
        if r.l2_norm() <= tol * b_norm {
            return Ok(x);
        }
        let ap = f.apply_linear(&p)?;
        let step = rz / ap.l2_inner(&p)?;
        x = x.add_scaled(step, &p)?;
        r = r.add_scaled(-step, &ap)?;
        z = f.precondition(&r, shift);
        let rz_next = r.l2_inner(&z)?;
        p = z.add_scaled(rz_next / rz, &p)?;
        rz = rz_next;
    }
    if r.l2_norm() <= 1e3 * tol * b_norm {
        Ok(x)
    } else {
        Err(Error::Linalg(format!(
            "conjugate gradients stalled at relative residual {:.3e}",
            r.l2_norm() / b_norm
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_functions_are_orthonormal() {
        let g = Grid::new(20.0, 2048).unwrap();
        let table: Vec<Vec<f64>> = g.nodes().iter().map(|&t| hermite_functions(t, 12)).collect();
        for i in 0..12 {
            for j in 0..12 {
                let ip: f64 = table.iter().map(|r| r[i] * r[j]).sum::<f64>() * g.spacing();
                let exact = if i == j { 1.0 } else { 0.0 };
                assert!((ip - exact).abs() < 1e-12, "{i} {j} {ip}");
            }
        }
    }

    #[test]
    fn hermite_parity() {
        let a = hermite_functions(0.7, 6);
        let b = hermite_functions(-0.7, 6);
        for k in 0..6 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a[k] - sign * b[k]).abs() < 1e-15);
        }
    }
}
