//! Discretisation, energy functional and critical-point search for the
//! fractional Hamiltonian system
//!
//! ```text
//! ₜD∞^α(₋∞D_t^α u) + L(t) u = ∇W(t, u),   u : ℝ → ℝⁿ,   1/2 < α < 1,
//! ```
//!
//! posed on a truncated line `[-T, T)` with spectral treatment of the
//! fractional operators.

pub mod energy;
pub mod error;
pub mod frac_ops;
pub mod grid;
pub mod model;
pub mod solver;

pub use energy::{BasisSet, EnergyBreakdown, Functional};
pub use error::{Error, Result};
pub use frac_ops::{Extension, FracOperator, FracOrder};
pub use grid::{Grid, GridFunction, SpectralFunction};
pub use model::{DiagonalField, MatrixField, Potential, PotentialLaw, ProblemInstance, Profile, Weight};
pub use solver::{Solution, SolverOptions};
