//! Problem definition: the matrix field `L(t)` with its lower bound `l(t)`,
//! the potential `W(t, u)`, and the builtin instance library.

mod checks;

pub use checks::{
    b_norm, check_hs1, check_hs2, check_hs3, check_instance, check_lw1, check_lw2, CheckParams, Condition,
    ConditionReport, MeasureReport, SampleSet, Violation,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_ops::FracOrder;
use crate::grid::Grid;

/// Symmetric matrix-valued coefficient `t ↦ L(t)` with a scalar lower bound
/// `(L(t)x, x) ≥ l(t)|x|²`.
pub trait MatrixField: Send + Sync {
    fn dim(&self) -> usize;
    /// Writes `L(t)` row-major into `out` (`dim × dim`).
    fn matrix(&self, t: f64, out: &mut [f64]);
    fn lower_bound(&self, t: f64) -> f64;
}

/// Scalar profiles used for `l(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `c0 + c1 t²`
    Quadratic { c0: f64, c1: f64 },
    /// `c0 + c1 t² sin² t`; equals `c0` at every `kπ`.
    OscillatingQuadratic { c0: f64, c1: f64 },
    Constant { c: f64 },
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::Quadratic { c0, c1 } => c0 + c1 * t * t,
            Profile::OscillatingQuadratic { c0, c1 } => {
                let s = t.sin();
                c0 + c1 * t * t * s * s
            }
            Profile::Constant { c } => c,
        }
    }

    /// Every profile here is even in `t`.
    fn is_even(&self) -> bool {
        true
    }
}

/// `L(t) = diag(l(t) + s_1, …, l(t) + s_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalField {
    pub profile: Profile,
    pub shifts: Vec<f64>,
}

impl DiagonalField {
    pub fn new(profile: Profile, shifts: Vec<f64>) -> Result<Self> {
        if shifts.is_empty() {
            return Err(Error::param("shifts", "at least one component is required"));
        }
        if shifts.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("shifts", "shifts must be finite"));
        }
        Ok(DiagonalField { profile, shifts })
    }

    pub fn scalar(profile: Profile) -> Self {
        DiagonalField {
            profile,
            shifts: vec![0.0],
        }
    }

    /// Diagonal entry for component `c` at `t`.
    pub fn entry(&self, t: f64, c: usize) -> f64 {
        self.profile.eval(t) + self.shifts[c]
    }
}

impl MatrixField for DiagonalField {
    fn dim(&self) -> usize {
        self.shifts.len()
    }

    fn matrix(&self, t: f64, out: &mut [f64]) {
        let n = self.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..n {
            out[c * n + c] = self.entry(t, c);
        }
    }

    fn lower_bound(&self, t: f64) -> f64 {
        let min_shift = self.shifts.iter().copied().fold(f64::INFINITY, f64::min);
        self.profile.eval(t) + min_shift
    }
}

/// Scalar weights `a(t)`, `b(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    /// `amp / (1 + (t/width)²)`
    Lorentzian { amp: f64, width: f64 },
    /// `amp · exp(-(t/width)²)`
    Gaussian { amp: f64, width: f64 },
    Constant { value: f64 },
}

impl Weight {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Weight::Lorentzian { amp, width } => {
                let x = t / width;
                amp / (1.0 + x * x)
            }
            Weight::Gaussian { amp, width } => {
                let x = t / width;
                amp * (-x * x).exp()
            }
            Weight::Constant { value } => value,
        }
    }

    pub fn scaled(&self, s: f64) -> Weight {
        match *self {
            Weight::Lorentzian { amp, width } => Weight::Lorentzian { amp: amp * s, width },
            Weight::Gaussian { amp, width } => Weight::Gaussian { amp: amp * s, width },
            Weight::Constant { value } => Weight::Constant { value: value * s },
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        let ok = match *self {
            Weight::Lorentzian { amp, width } | Weight::Gaussian { amp, width } => {
                amp.is_finite() && amp >= 0.0 && width.is_finite() && width > 0.0
            }
            Weight::Constant { value } => value.is_finite() && value >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(name, format!("invalid weight {self:?}")))
        }
    }
}

/// The functional form of `W(t, u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialLaw {
    Zero,
    /// `w(t) |u|^p`
    Power { exponent: f64, weight: Weight },
    /// `w(t) (|u|^p + |u|^q)`
    PowerSum { exponents: (f64, f64), weight: Weight },
    /// `w(t) u₁³`, odd in `u`.
    OddCubic { weight: Weight },
}

/// Smallest regularised modulus used when forming the Hessian of `|u|^p`.
const HESSIAN_FLOOR: f64 = 1e-12;

/// Potential `W(t, u)` together with the structural constants it is claimed
/// to satisfy: `θ`, `σ`, `a(t)`, `b(t)`.
///
/// `smoothing = ε > 0` replaces `|u|` by `√(|u|² + ε²)` in the power laws
/// (shifted so that `W(t, 0) = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub law: PotentialLaw,
    pub theta: f64,
    pub sigma: f64,
    pub a: Weight,
    pub b: Weight,
    #[serde(default)]
    pub smoothing: f64,
}

fn smoothed_power(r2: f64, eps: f64, p: f64) -> (f64, f64) {
    // (value, d value / d r² · 2) i.e. returns s^p - ε^p and p s^{p-2}
    let s = (r2 + eps * eps).sqrt();
    let value = if s == 0.0 { 0.0 } else { s.powf(p) - eps.powf(p) };
    let slope = if s == 0.0 { 0.0 } else { p * s.powf(p - 2.0) };
    (value, slope)
}

impl Potential {
    /// `W = a(t)|u|^θ` with `b = θ a` and `σ = θ`.
    pub fn homogeneous(theta: f64, a: Weight) -> Self {
        Potential {
            law: PotentialLaw::Power {
                exponent: theta,
                weight: a.clone(),
            },
            theta,
            sigma: theta,
            b: a.scaled(theta),
            a,
            smoothing: 0.0,
        }
    }

    /// `W ≡ 0`, with `b ≡ 0`; `a` is kept so the lower growth bound can be tested.
    pub fn zero(theta: f64, a: Weight) -> Self {
        Potential {
            law: PotentialLaw::Zero,
            theta,
            sigma: theta,
            b: Weight::Constant { value: 0.0 },
            a,
            smoothing: 0.0,
        }
    }

    pub fn with_smoothing(mut self, eps: f64) -> Self {
        self.smoothing = eps;
        self
    }

    /// `1 < σ ≤ θ < 2`, nonnegative weights, `ε ≥ 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 1.0 && self.theta < 2.0) {
            return Err(Error::param("theta", format!("need 1 < θ < 2, got {}", self.theta)));
        }
        if !(self.sigma > 1.0 && self.sigma <= self.theta) {
            return Err(Error::param(
                "sigma",
                format!("need 1 < σ ≤ θ < 2, got σ = {}, θ = {}", self.sigma, self.theta),
            ));
        }
        if !(self.smoothing.is_finite() && self.smoothing >= 0.0) {
            return Err(Error::param("smoothing", "ε must be finite and nonnegative"));
        }
        self.a.validate("a")?;
        self.b.validate("b")?;
        match &self.law {
            PotentialLaw::Zero => Ok(()),
            PotentialLaw::Power { exponent, weight } => {
                if !(*exponent > 1.0 && exponent.is_finite()) {
                    return Err(Error::param("exponent", "power law exponent must exceed 1"));
                }
                weight.validate("weight")
            }
            PotentialLaw::PowerSum { exponents, weight } => {
                if !(exponents.0 > 1.0 && exponents.1 > 1.0) {
                    return Err(Error::param("exponents", "power law exponents must exceed 1"));
                }
                weight.validate("weight")
            }
            PotentialLaw::OddCubic { weight } => weight.validate("weight"),
        }
    }

    pub fn a(&self, t: f64) -> f64 {
        self.a.eval(t)
    }

    pub fn b(&self, t: f64) -> f64 {
        self.b.eval(t)
    }

    pub fn value(&self, t: f64, u: &[f64]) -> f64 {
        let r2: f64 = u.iter().map(|x| x * x).sum();
        let eps = self.smoothing;
        match &self.law {
            PotentialLaw::Zero => 0.0,
            PotentialLaw::Power { exponent, weight } => weight.eval(t) * smoothed_power(r2, eps, *exponent).0,
            PotentialLaw::PowerSum { exponents, weight } => {
                weight.eval(t)
                    * (smoothed_power(r2, eps, exponents.0).0 + smoothed_power(r2, eps, exponents.1).0)
            }
            PotentialLaw::OddCubic { weight } => weight.eval(t) * u[0].powi(3),
        }
    }

    pub fn gradient(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let r2: f64 = u.iter().map(|x| x * x).sum();
        let eps = self.smoothing;
        let radial = |slope: f64, out: &mut [f64]| {
            for (o, x) in out.iter_mut().zip(u) {
                *o = slope * x;
            }
        };
        match &self.law {
            PotentialLaw::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            PotentialLaw::Power { exponent, weight } => {
                radial(weight.eval(t) * smoothed_power(r2, eps, *exponent).1, out)
            }
            PotentialLaw::PowerSum { exponents, weight } => {
                let s = smoothed_power(r2, eps, exponents.0).1 + smoothed_power(r2, eps, exponents.1).1;
                radial(weight.eval(t) * s, out)
            }
            PotentialLaw::OddCubic { weight } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[0] = 3.0 * weight.eval(t) * u[0] * u[0];
            }
        }
    }

    /// Hessian `∇²W(t, u)`, row-major. Near `u = 0` the modulus is floored
    /// at 1e-12, so the result stays finite for `θ < 2`.
    pub fn hessian(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        let r2: f64 = u.iter().map(|x| x * x).sum();
        let eps = self.smoothing;
        let power_term = |p: f64, w: f64, out: &mut [f64]| {
            let s = (r2 + eps * eps).sqrt().max(HESSIAN_FLOOR);
            let d1 = p * s.powf(p - 2.0);
            let d2 = p * (p - 2.0) * s.powf(p - 4.0);
            for i in 0..n {
                for j in 0..n {
                    let delta = if i == j { d1 } else { 0.0 };
                    out[i * n + j] += w * (delta + d2 * u[i] * u[j]);
                }
            }
        };
        match &self.law {
            PotentialLaw::Zero => {}
            PotentialLaw::Power { exponent, weight } => power_term(*exponent, weight.eval(t), out),
            PotentialLaw::PowerSum { exponents, weight } => {
                let w = weight.eval(t);
                power_term(exponents.0, w, out);
                power_term(exponents.1, w, out);
            }
            PotentialLaw::OddCubic { weight } => out[0] = 6.0 * weight.eval(t) * u[0],
        }
    }

    /// Whether `W(-t, u) = W(t, u)`; all provided weights are even.
    pub fn is_time_even(&self) -> bool {
        true
    }
}

/// One fully specified fractional Hamiltonian system on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub name: String,
    pub alpha: FracOrder,
    pub field: DiagonalField,
    pub potential: Potential,
    pub grid: Grid,
}

pub const BUILTIN_NAMES: [&str; 3] = ["coercive_A", "noncoercive_B", "vector_C"];

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        alpha: f64,
        field: DiagonalField,
        potential: Potential,
        grid: Grid,
    ) -> Result<Self> {
        let inst = ProblemInstance {
            name: name.into(),
            alpha: FracOrder::for_system(alpha)?,
            field,
            potential,
            grid,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        FracOrder::for_system(self.alpha.value())?;
        if self.field.shifts.is_empty() {
            return Err(Error::param("dim", "dimension must be at least 1"));
        }
        self.potential.validate()
    }

    /// Builtin instances on the default grid `T = 20`, `N = 2048`.
    pub fn builtin(name: &str) -> Result<Self> {
        let grid = Grid::new(20.0, 2048)?;
        Self::builtin_on(name, grid)
    }

    pub fn builtin_on(name: &str, grid: Grid) -> Result<Self> {
        let a = Weight::Lorentzian { amp: 1.0, width: 1.0 };
        let potential = Potential::homogeneous(1.5, a);
        let field = match name {
            "coercive_A" => DiagonalField::scalar(Profile::Quadratic { c0: 1.0, c1: 1.0 }),
            "noncoercive_B" => {
                DiagonalField::scalar(Profile::OscillatingQuadratic { c0: 1.0, c1: 1.0 })
            }
            "vector_C" => DiagonalField::new(Profile::Quadratic { c0: 1.0, c1: 1.0 }, vec![0.0, 1.0])?,
            other => return Err(Error::UnknownInstance(other.to_string())),
        };
        ProblemInstance::new(name, 0.6, field, potential, grid)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_potential(mut self, potential: Potential) -> Result<Self> {
        self.potential = potential;
        self.validate()?;
        Ok(self)
    }

    pub fn with_smoothing(mut self, eps: f64) -> Self {
        self.potential.smoothing = eps;
        self
    }

    /// `min_k l(t_k)` over the grid nodes.
    pub fn inf_lower_bound(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| self.field.lower_bound(self.grid.node(k)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the discrete functional is invariant under `u(t) ↦ u(-t)`.
    pub fn is_reflection_symmetric(&self) -> bool {
        self.field.profile.is_even() && self.potential.is_time_even()
    }
}
