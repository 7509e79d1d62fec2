//! Uniform periodic grid on `[-T, T)`, discrete Fourier transforms and quadrature.
//!
//! The transform is normalised so that a coefficient approximates the
//! continuous transform `û(w) = ∫ e^{-itw} u(t) dt` restricted to the grid
//! interval. With nodes `t_k = -T + k h` and frequencies `w_m = π m / T` this
//! gives
//!
//! ```text
//! û_m = h (-1)^m Σ_k u_k e^{-2πi mk/N},     u_k = (1/2T) Σ_m û_m e^{i w_m t_k}
//! ```
//!
//! Coefficients are stored in FFT order (`m = 0, 1, …, N/2-1, -N/2, …, -1`).

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn fft_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Uniform discretisation of `[-T, T)` with `N` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_width: f64,
    num_points: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(half_width: f64, num_points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if num_points < Self::MIN_POINTS || num_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "number of points must be even and at least {}, got {num_points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Grid {
            half_width,
            num_points,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.num_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.num_points as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.num_points).map(|k| self.node(k)).collect()
    }

    /// Signed mode number of the coefficient stored at FFT position `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        let n = self.num_points;
        if idx < n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        }
    }

    /// Angular frequency `π m / T` at FFT position `idx`.
    pub fn frequency(&self, idx: usize) -> f64 {
        std::f64::consts::PI * self.mode(idx) as f64 / self.half_width
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.num_points).map(|i| self.frequency(i)).collect()
    }

    /// FFT position of the unpaired Nyquist mode `m = -N/2`.
    pub fn nyquist_index(&self) -> usize {
        self.num_points / 2
    }

    pub fn max_frequency(&self) -> f64 {
        std::f64::consts::PI * (self.num_points / 2) as f64 / self.half_width
    }

    /// Grid on `[-pT, pT)` with the same spacing; the original nodes sit at
    /// offset [`Grid::embedding_offset`].
    pub fn extended(&self, factor: usize) -> Result<Grid> {
        if factor == 0 {
            return Err(Error::param("factor", "extension factor must be >= 1"));
        }
        Grid::new(self.half_width * factor as f64, self.num_points * factor)
    }

    pub fn embedding_offset(&self, factor: usize) -> usize {
        (factor - 1) * self.num_points / 2
    }

    /// Index of the reflected node `t -> -t` (periodic: `-T` maps to itself).
    pub fn reflect_index(&self, k: usize) -> usize {
        (self.num_points - k) % self.num_points
    }

    /// Periodic trapezoid rule `h Σ f_k`.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        self.spacing() * samples.iter().sum::<f64>()
    }
}

/// Samples of an `ℝⁿ`-valued function on a [`Grid`], stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "dimension must be at least 1"));
        }
        let expected = grid.len() * dim;
        if values.len() != expected {
            return Err(Error::Shape {
                expected,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node: pos / dim,
                component: pos % dim,
            });
        }
        Ok(GridFunction { grid, dim, values })
    }

    pub(crate) fn from_raw(grid: Grid, dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len() * dim);
        GridFunction { grid, dim, values }
    }

    pub fn zeros(grid: Grid, dim: usize) -> Self {
        GridFunction::from_raw(grid, dim, vec![0.0; grid.len() * dim])
    }

    /// Scalar function sampled from `f(t)`.
    pub fn from_scalar_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        GridFunction::new(grid, 1, values)
    }

    /// Vector function sampled from `f(t, out)`.
    pub fn from_fn(grid: Grid, dim: usize, mut f: impl FnMut(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; grid.len() * dim];
        for (k, row) in values.chunks_mut(dim.max(1)).enumerate() {
            f(grid.node(k), row);
        }
        GridFunction::new(grid, dim, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.dim).copied().collect()
    }

    pub fn same_layout(&self, other: &GridFunction) -> bool {
        self.grid == other.grid && self.dim == other.dim
    }

    pub(crate) fn check_layout(&self, other: &GridFunction) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scaled(&self, s: f64) -> GridFunction {
        GridFunction::from_raw(
            self.grid,
            self.dim,
            self.values.iter().map(|v| v * s).collect(),
        )
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &GridFunction) -> Result<GridFunction> {
        self.check_layout(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(GridFunction::from_raw(self.grid, self.dim, values))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.add_scaled(-1.0, other)
    }

    /// `∫ (u(t), v(t)) dt` by the periodic trapezoid rule.
    pub fn l2_inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_layout(other)?;
        Ok(self.grid.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| self.row(k).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Fraction of `‖u‖²_{L²}` carried by nodes with `|t| > 0.8 T`.
    pub fn tail_mass(&self) -> f64 {
        let cut = 0.8 * self.grid.half_width();
        let mut total = 0.0;
        let mut tail = 0.0;
        for k in 0..self.grid.len() {
            let m: f64 = self.row(k).iter().map(|v| v * v).sum();
            total += m;
            if self.grid.node(k).abs() > cut {
                tail += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// `t -> u(-t)` on the periodic grid.
    pub fn reflected(&self) -> GridFunction {
        let n = self.grid.len();
        let mut values = vec![0.0; self.values.len()];
        for k in 0..n {
            let r = self.grid.reflect_index(k);
            values[k * self.dim..(k + 1) * self.dim].copy_from_slice(self.row(r));
        }
        GridFunction::from_raw(self.grid, self.dim, values)
    }
}

/// Fourier coefficients of a [`GridFunction`], FFT order, node-major per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    grid: Grid,
    dim: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralFunction {
    pub fn new(grid: Grid, dim: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = grid.len() * dim;
        if coeffs.len() != expected {
            return Err(Error::Shape {
                expected,
                found: coeffs.len(),
            });
        }
        Ok(SpectralFunction { grid, dim, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, idx: usize, c: usize) -> Complex64 {
        self.coeffs[idx * self.dim + c]
    }

    /// Multiplies every component of mode `idx` by `symbol(idx)`.
    pub fn apply_symbol(&self, symbol: impl Fn(usize) -> Complex64) -> SpectralFunction {
        let mut coeffs = self.coeffs.clone();
        for (idx, chunk) in coeffs.chunks_mut(self.dim).enumerate() {
            let s = symbol(idx);
            for c in chunk {
                *c *= s;
            }
        }
        SpectralFunction {
            grid: self.grid,
            dim: self.dim,
            coeffs,
        }
    }

    /// `(1/2T) Σ_m |û_m|²`, the spectral side of discrete Parseval.
    pub fn energy(&self) -> f64 {
        self.weighted_energy(|_| 1.0)
    }

    /// `(1/2T) Σ_m weight(m) |û_m|²`.
    pub fn weighted_energy(&self, weight: impl Fn(usize) -> f64) -> f64 {
        let sum: f64 = self
            .coeffs
            .chunks(self.dim)
            .enumerate()
            .map(|(idx, chunk)| weight(idx) * chunk.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum();
        sum / (2.0 * self.grid.half_width())
    }
}

fn sign_of_mode(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Approximates `∫ e^{-itw} u(t) dt` at every grid frequency.
pub fn forward_transform(u: &GridFunction) -> SpectralFunction {
    let grid = *u.grid();
    let n = grid.len();
    let dim = u.dim();
    let h = grid.spacing();
    let fft = fft_forward(n);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n * dim];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..dim {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(u.values()[k * dim + c], 0.0);
        }
        fft.process(&mut buf);
        for (idx, b) in buf.iter().enumerate() {
            coeffs[idx * dim + c] = *b * (h * sign_of_mode(grid.mode(idx)));
        }
    }
    SpectralFunction { grid, dim, coeffs }
}

/// Complex samples of the inverse transform; used to measure realness.
pub fn inverse_transform_complex(s: &SpectralFunction) -> Vec<Complex64> {
    let grid = *s.grid();
    let n = grid.len();
    let dim = s.dim();
    let scale = 1.0 / (2.0 * grid.half_width());
    let fft = fft_inverse(n);
    let mut out = vec![Complex64::new(0.0, 0.0); n * dim];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..dim {
        for (idx, b) in buf.iter_mut().enumerate() {
            *b = s.coeffs[idx * dim + c] * (scale * sign_of_mode(grid.mode(idx)));
        }
        fft.process(&mut buf);
        for (k, b) in buf.iter().enumerate() {
            out[k * dim + c] = *b;
        }
    }
    out
}

/// Inverse of [`forward_transform`]; the imaginary part is discarded.
pub fn inverse_transform(s: &SpectralFunction) -> GridFunction {
    let values = inverse_transform_complex(s).into_iter().map(|z| z.re).collect();
    GridFunction::from_raw(*s.grid(), s.dim(), values)
}

/// `h Σ f(t_k)` for a scalar grid function.
pub fn quadrature(f: &GridFunction) -> Result<f64> {
    if f.dim() != 1 {
        return Err(Error::param("f", "quadrature expects a scalar grid function"));
    }
    Ok(f.grid().integrate(f.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_layout() {
        let g = Grid::new(20.0, 4096).unwrap();
        assert_eq!(g.spacing(), 0.009765625);
        let g = Grid::new(1.0, 8).unwrap();
        assert_eq!(
            g.nodes(),
            vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75]
        );
        assert_eq!(g.mode(4), -4);
        assert_eq!(g.frequency(1), PI);
        assert_eq!(g.reflect_index(0), 0);
        assert_eq!(g.reflect_index(4), 4);
        assert_eq!(g.reflect_index(1), 7);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(Grid::new(10.0, 7).is_err());
        assert!(Grid::new(10.0, 6).is_err());
        assert!(Grid::new(0.0, 16).is_err());
        assert!(Grid::new(-1.0, 16).is_err());
        assert!(Grid::new(f64::NAN, 16).is_err());
    }

    #[test]
    fn grid_function_validates() {
        let g = Grid::new(1.0, 8).unwrap();
        assert!(GridFunction::new(g, 1, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::INFINITY;
        assert_eq!(
            GridFunction::new(g, 1, v),
            Err(Error::NonFinite {
                node: 3,
                component: 0
            })
        );
        assert!(GridFunction::new(g, 0, vec![]).is_err());
    }

    #[test]
    fn zero_transforms_to_zero() {
        let g = Grid::new(3.0, 32).unwrap();
        let s = forward_transform(&GridFunction::zeros(g, 2));
        assert!(s.coeffs().iter().all(|c| c.norm() == 0.0));
        let back = inverse_transform(&SpectralFunction::new(g, 1, vec![Complex64::new(0.0, 0.0); 32]).unwrap());
        assert!(back.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cosine_mode_concentrates() {
        let g = Grid::new(5.0, 64).unwrap();
        let w1 = g.frequency(3);
        let u = GridFunction::from_scalar_fn(g, |t| (w1 * t).cos()).unwrap();
        let s = forward_transform(&u);
        for idx in 0..64 {
            let mag = s.coeff(idx, 0).norm();
            if g.mode(idx).abs() == 3 {
                // h * N / 2 = T
                assert!((mag - 5.0).abs() < 1e-12, "{mag}");
            } else {
                assert!(mag < 1e-12);
            }
        }
        let back = inverse_transform(&s);
        for (a, b) in back.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        let g = Grid::new(20.0, 4096).unwrap();
        let u = GridFunction::from_scalar_fn(g, |t| (-t * t).exp()).unwrap();
        let s = forward_transform(&u);
        for idx in [0usize, 1, 5, 17, 40, 100, 4095, 4000] {
            let w = g.frequency(idx);
            let exact = PI.sqrt() * (-w * w / 4.0).exp();
            let c = s.coeff(idx, 0);
            assert!(c.im.abs() < 1e-12);
            assert!(
                (c.re - exact).abs() <= 1e-8 * exact + 1e-14,
                "w = {w}: {} vs {exact}",
                c.re
            );
        }
    }

    #[test]
    fn quadrature_examples() {
        let g = Grid::new(1.0, 8).unwrap();
        let one = GridFunction::from_scalar_fn(g, |_| 1.0).unwrap();
        assert_eq!(quadrature(&one).unwrap(), 2.0);
        assert_eq!(quadrature(&GridFunction::zeros(g, 1)).unwrap(), 0.0);
        let g = Grid::new(20.0, 4096).unwrap();
        let gauss = GridFunction::from_scalar_fn(g, |t| (-t * t).exp()).unwrap();
        let q = quadrature(&gauss).unwrap();
        assert!((q - PI.sqrt()).abs() <= 1e-10 * PI.sqrt());
        assert!(quadrature(&GridFunction::zeros(g, 2)).is_err());
    }

    #[test]
    fn tail_mass_and_reflection() {
        let g = Grid::new(10.0, 256).unwrap();
        let u = GridFunction::from_scalar_fn(g, |t| (-(t - 1.0) * (t - 1.0)).exp()).unwrap();
        assert!(u.tail_mass() < 1e-20);
        let r = u.reflected();
        assert!((r.values()[g.reflect_index(140)] - u.values()[140]).abs() == 0.0);
        let flat = GridFunction::from_scalar_fn(g, |_| 1.0).unwrap();
        assert!((flat.tail_mass() - 0.2).abs() < 0.01);
    }
}
