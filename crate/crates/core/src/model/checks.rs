//! Sampling validators for the structural hypotheses on `L` and `W`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MatrixField, Potential, ProblemInstance};
use crate::error::{Error, Result};
use crate::grid::Grid;

const SLACK: f64 = 1e-10;
const PARITY_SLACK: f64 = 1e-12;

/// Reading used for the printed `δW` and `(W, u)` in the growth conditions.
const GRADIENT_READING: &str = "gradient reading: |δW| and (W,u) are evaluated as |∇W| and (∇W,u)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "L_w1")]
    Lw1,
    #[serde(rename = "L_w2")]
    Lw2,
    #[serde(rename = "HS1")]
    Hs1,
    #[serde(rename = "HS2")]
    Hs2,
    #[serde(rename = "HS3")]
    Hs3,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Lw1 => "L_w1",
            Condition::Lw2 => "L_w2",
            Condition::Hs1 => "HS1",
            Condition::Hs2 => "HS2",
            Condition::Hs3 => "HS3",
        })
    }
}

/// A single failed sample: `lhs` should not exceed `rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub t: f64,
    pub u: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

impl Violation {
    fn excess(&self) -> f64 {
        self.lhs - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub passed: bool,
    pub samples: usize,
    pub violations: usize,
    pub worst: Option<Violation>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    fn new(condition: Condition) -> Self {
        ConditionReport {
            condition,
            passed: true,
            samples: 0,
            violations: 0,
            worst: None,
            metrics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn absorb(&mut self, tally: Tally) {
        self.samples += tally.samples;
        self.violations += tally.violations;
        self.worst = pick_worse(self.worst.take(), tally.worst);
        self.passed = self.violations == 0;
    }
}

/// Sublevel-set measures of `l` on windows around the given centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub r0: f64,
    pub level: f64,
    pub centers: Vec<f64>,
    pub measures: Vec<f64>,
    pub decaying: bool,
}

impl From<MeasureReport> for ConditionReport {
    fn from(m: MeasureReport) -> Self {
        let mut r = ConditionReport::new(Condition::Lw2);
        r.samples = m.centers.len();
        r.passed = m.decaying;
        if !m.decaying {
            r.violations = 1;
            let last = m.measures.len() - 1;
            r.worst = Some(Violation {
                check: "sublevel measure does not decay".into(),
                t: m.centers[last],
                u: Vec::new(),
                lhs: m.measures[last],
                rhs: 0.5 * m.measures[0],
            });
        }
        r.metrics.insert("r0".into(), m.r0);
        r.metrics.insert("level".into(), m.level);
        for (y, mu) in m.centers.iter().zip(&m.measures) {
            r.metrics.insert(format!("measure@{y:.6}"), *mu);
        }
        r
    }
}

#[derive(Default)]
struct Tally {
    samples: usize,
    violations: usize,
    worst: Option<Violation>,
}

impl Tally {
    fn record(&mut self, ok: bool, v: impl FnOnce() -> Violation) {
        self.samples += 1;
        if !ok {
            self.violations += 1;
            self.worst = pick_worse(self.worst.take(), Some(v()));
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.samples += other.samples;
        self.violations += other.violations;
        self.worst = pick_worse(self.worst, other.worst);
        self
    }
}

fn pick_worse(a: Option<Violation>, b: Option<Violation>) -> Option<Violation> {
    match (a, b) {
        (Some(a), Some(b)) => {
            // ties broken on t so parallel reduction order cannot matter
            if b.excess() > a.excess() || (b.excess() == a.excess() && b.t < a.t) {
                Some(b)
            } else {
                Some(a)
            }
        }
        (a, None) => a,
        (None, b) => b,
    }
}

/// Product sample set: times × state vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub ts: Vec<f64>,
    pub us: Vec<Vec<f64>>,
}

impl SampleSet {
    pub const RADII: usize = 25;
    pub const DIRECTIONS: usize = 16;

    /// Grid nodes × log-spaced radii in `[1e-3, 1e3]` × directions
    /// (`±1` for `n = 1`, otherwise 16 unit vectors).
    pub fn standard(grid: &Grid, dim: usize) -> Self {
        let radii: Vec<f64> = (0..Self::RADII)
            .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (Self::RADII - 1) as f64))
            .collect();
        let dirs = directions(dim);
        let us = radii
            .iter()
            .flat_map(|&r| dirs.iter().map(move |d| d.iter().map(|x| r * x).collect()))
            .collect();
        SampleSet {
            ts: grid.nodes(),
            us,
        }
    }

    pub fn len(&self) -> usize {
        self.ts.len() * self.us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn directions(dim: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..SampleSet::DIRECTIONS)
            .map(|k| {
                let phi = 2.0 * PI * (k as f64 + 0.5) / SampleSet::DIRECTIONS as f64;
                vec![phi.cos(), phi.sin()]
            })
            .collect(),
        _ => {
            // coordinate axes, both signs, plus normalized all-ones diagonals
            let mut out = Vec::new();
            for c in 0..dim {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; dim];
                    v[c] = s;
                    out.push(v);
                }
            }
            let norm = (dim as f64).sqrt();
            for mask in 0..SampleSet::DIRECTIONS.min(1 << dim) {
                out.push(
                    (0..dim)
                        .map(|c| if mask >> c & 1 == 1 { -1.0 / norm } else { 1.0 / norm })
                        .collect(),
                );
            }
            out
        }
    }
}

fn norm(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn within(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs <= rhs + slack * (1.0 + rhs.abs())
}

/// Symmetry of `L(t)`, `min eig L(t) ≥ l(t)`, and `inf l > 0` on the given times.
pub fn check_lw1(field: &dyn MatrixField, ts: &[f64]) -> ConditionReport {
    let n = field.dim();
    let mut report = ConditionReport::new(Condition::Lw1);
    let tally = ts
        .par_iter()
        .map(|&t| {
            let mut tally = Tally::default();
            let mut m = vec![0.0; n * n];
            field.matrix(t, &mut m);
            let l = field.lower_bound(t);
            let asym = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (m[i * n + j] - m[j * n + i]).abs())
                .fold(0.0, f64::max);
            tally.record(asym <= PARITY_SLACK, || Violation {
                check: "L(t) symmetric".into(),
                t,
                u: Vec::new(),
                lhs: asym,
                rhs: PARITY_SLACK,
            });
            let min_eig = if n == 1 {
                m[0]
            } else {
                let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i * n + j] + m[j * n + i]));
                SymmetricEigen::new(sym).eigenvalues.min()
            };
            tally.record(min_eig >= l - SLACK, || Violation {
                check: "l(t) <= min eig L(t)".into(),
                t,
                u: Vec::new(),
                lhs: l,
                rhs: min_eig,
            });
            tally.record(l > 0.0 && l.is_finite(), || Violation {
                check: "l(t) > 0".into(),
                t,
                u: Vec::new(),
                lhs: 0.0,
                rhs: l,
            });
            tally
        })
        .reduce(Tally::default, Tally::merge);
    report.absorb(tally);
    let inf_l = ts
        .iter()
        .map(|&t| field.lower_bound(t))
        .fold(f64::INFINITY, f64::min);
    report.metrics.insert("inf_l".into(), inf_l);
    report
}

/// Lebesgue measure of `{l ≤ level} ∩ (y − r0, y + r0)` for each center,
/// by midpoint counting on `subgrid_points` cells.
pub fn check_lw2(
    l: &(dyn Fn(f64) -> f64 + Sync),
    r0: f64,
    level: f64,
    centers: &[f64],
    subgrid_points: usize,
) -> Result<MeasureReport> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::param("r0", "window radius must be positive"));
    }
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::param("M", "sublevel threshold must be positive"));
    }
    if subgrid_points < 1000 {
        return Err(Error::param("subgrid_points", "at least 1000 subgrid points are required"));
    }
    if centers.is_empty() {
        return Err(Error::param("window_centers", "at least one window is required"));
    }
    let cell = 2.0 * r0 / subgrid_points as f64;
    let measures: Vec<f64> = centers
        .par_iter()
        .map(|&y| {
            let count = (0..subgrid_points)
                .filter(|&i| l(y - r0 + (i as f64 + 0.5) * cell) <= level)
                .count();
            count as f64 * cell
        })
        .collect();
    let by_abs = |pick_max: bool| {
        let mut idx = 0;
        for (i, y) in centers.iter().enumerate() {
            let better = if pick_max {
                y.abs() > centers[idx].abs()
            } else {
                y.abs() < centers[idx].abs()
            };
            if better {
                idx = i;
            }
        }
        idx
    };
    let (near, far) = (by_abs(false), by_abs(true));
    let all_zero = measures.iter().all(|&m| m == 0.0);
    let decaying = all_zero || (far != near && measures[far] <= 0.5 * measures[near]);
    Ok(MeasureReport {
        r0,
        level,
        centers: centers.to_vec(),
        measures,
        decaying,
    })
}

fn sample_pairs<'a>(samples: &'a SampleSet) -> impl ParallelIterator<Item = (f64, &'a [f64])> + 'a {
    samples
        .ts
        .par_iter()
        .flat_map_iter(move |&t| samples.us.iter().map(move |u| (t, u.as_slice())))
}

/// Lower bound `W ≥ a|u|^θ`, gradient bound `|∇W| ≤ b|u|^{θ-1}`, the implied
/// subquadratic bound `W ≤ (b/θ)|u|^θ`, `W(t,0) = 0`, positivity of `a`, and
/// finiteness of `‖b‖` in `L^{2/(2-θ)}` over the grid.
pub fn check_hs1(p: &Potential, grid: &Grid, samples: &SampleSet) -> Result<ConditionReport> {
    let theta = p.theta;
    if !(theta > 1.0 && theta < 2.0) {
        return Err(Error::param("theta", format!("need 1 < θ < 2, got {theta}")));
    }
    let n = samples.us.first().map_or(1, Vec::len);
    let mut report = ConditionReport::new(Condition::Hs1);
    report.notes.push(GRADIENT_READING.into());

    let at_zero = samples
        .ts
        .par_iter()
        .map(|&t| {
            let mut tally = Tally::default();
            let zero = vec![0.0; n];
            let w0 = p.value(t, &zero);
            tally.record(w0 == 0.0, || Violation {
                check: "W(t,0) = 0".into(),
                t,
                u: zero.clone(),
                lhs: w0.abs(),
                rhs: 0.0,
            });
            let a = p.a(t);
            tally.record(a > 0.0 && a.is_finite(), || Violation {
                check: "a(t) > 0".into(),
                t,
                u: Vec::new(),
                lhs: 0.0,
                rhs: a,
            });
            tally
        })
        .reduce(Tally::default, Tally::merge);
    report.absorb(at_zero);

    let subquadratic = sample_pairs(samples)
        .map(|(t, u)| {
            let mut lower = Tally::default();
            let mut sub = Tally::default();
            let r = norm(u);
            let w = p.value(t, u);
            let mut g = vec![0.0; u.len()];
            p.gradient(t, u, &mut g);
            let (a, b) = (p.a(t), p.b(t));
            let floor = a * r.powf(theta);
            lower.record(within(floor, w, SLACK), || Violation {
                check: "W >= a|u|^θ".into(),
                t,
                u: u.to_vec(),
                lhs: floor,
                rhs: w,
            });
            let gn = norm(&g);
            let cap = b * r.powf(theta - 1.0);
            lower.record(within(gn, cap, SLACK), || Violation {
                check: "|∇W| <= b|u|^(θ-1)".into(),
                t,
                u: u.to_vec(),
                lhs: gn,
                rhs: cap,
            });
            let ceiling = b / theta * r.powf(theta);
            sub.record(within(w, ceiling, SLACK), || Violation {
                check: "W <= (b/θ)|u|^θ".into(),
                t,
                u: u.to_vec(),
                lhs: w,
                rhs: ceiling,
            });
            (lower, sub)
        })
        .reduce(
            || (Tally::default(), Tally::default()),
            |x, y| (x.0.merge(y.0), x.1.merge(y.1)),
        );
    report
        .metrics
        .insert("subquadratic_violations".into(), subquadratic.1.violations as f64);
    report.absorb(subquadratic.0);
    report.absorb(subquadratic.1);

    let a_max = samples.ts.iter().map(|&t| p.a(t)).fold(0.0, f64::max);
    report.metrics.insert("a_max".into(), a_max);

    let q = 2.0 / (2.0 - theta);
    let (b_norm, outer_share) = b_norm_with_share(p, grid, q);
    report.metrics.insert("b_norm_exponent".into(), q);
    report.metrics.insert("b_norm".into(), b_norm);
    report.metrics.insert("b_norm_outer_share".into(), outer_share);
    let finite = b_norm.is_finite() && outer_share <= 1e-3;
    report.metrics.insert("b_norm_finite".into(), if finite { 1.0 } else { 0.0 });
    if !finite {
        report.violations += 1;
        report.passed = false;
        report.notes.push(format!(
            "b-norm not resolved on the grid: {:.3e} of the mass sits in |t| > T/2",
            outer_share
        ));
    }
    Ok(report)
}

/// `‖b‖_{L^q}` by grid quadrature plus the share of `∫|b|^q` carried by `|t| > T/2`.
fn b_norm_with_share(p: &Potential, grid: &Grid, q: f64) -> (f64, f64) {
    let half = 0.5 * grid.half_width();
    let h = grid.spacing();
    let (mut total, mut outer) = (0.0, 0.0);
    for t in grid.nodes() {
        let v = p.b(t).abs().powf(q) * h;
        total += v;
        if t.abs() > half {
            outer += v;
        }
    }
    let share = if total > 0.0 { outer / total } else { 0.0 };
    (total.powf(1.0 / q), share)
}

/// Quadrature value of `‖b‖_{L^{2/(2-θ)}}` on the grid.
pub fn b_norm(p: &Potential, grid: &Grid) -> f64 {
    b_norm_with_share(p, grid, 2.0 / (2.0 - p.theta)).0
}

/// `(∇W(t,u), u) ≤ σ W(t,u)` on samples with `u ≠ 0`.
pub fn check_hs2(p: &Potential, samples: &SampleSet) -> Result<ConditionReport> {
    let sigma = p.sigma;
    if !(sigma > 1.0 && sigma <= p.theta) {
        return Err(Error::param(
            "sigma",
            format!("need 1 < σ ≤ θ, got σ = {sigma}, θ = {}", p.theta),
        ));
    }
    let mut report = ConditionReport::new(Condition::Hs2);
    report.notes.push(GRADIENT_READING.into());
    let tally = sample_pairs(samples)
        .filter(|(_, u)| norm(u) > 0.0)
        .map(|(t, u)| {
            let mut tally = Tally::default();
            let mut g = vec![0.0; u.len()];
            p.gradient(t, u, &mut g);
            let lhs: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
            let rhs = sigma * p.value(t, u);
            tally.record(within(lhs, rhs, SLACK), || Violation {
                check: "(∇W,u) <= σW".into(),
                t,
                u: u.to_vec(),
                lhs,
                rhs,
            });
            tally
        })
        .reduce(Tally::default, Tally::merge);
    report.absorb(tally);
    Ok(report)
}

/// Evenness of `W` in `u`, and the matching oddness of `∇W`.
pub fn check_hs3(p: &Potential, samples: &SampleSet) -> ConditionReport {
    let mut report = ConditionReport::new(Condition::Hs3);
    let tally = sample_pairs(samples)
        .map(|(t, u)| {
            let mut tally = Tally::default();
            let neg: Vec<f64> = u.iter().map(|x| -x).collect();
            let (w, wn) = (p.value(t, u), p.value(t, &neg));
            let tol = PARITY_SLACK * (1.0 + w.abs());
            tally.record((w - wn).abs() <= tol, || Violation {
                check: "W(t,-u) = W(t,u)".into(),
                t,
                u: u.to_vec(),
                lhs: (w - wn).abs(),
                rhs: tol,
            });
            let (mut g, mut gn) = (vec![0.0; u.len()], vec![0.0; u.len()]);
            p.gradient(t, u, &mut g);
            p.gradient(t, &neg, &mut gn);
            let gap = norm(&g.iter().zip(&gn).map(|(a, b)| a + b).collect::<Vec<_>>());
            let tol = PARITY_SLACK * (1.0 + norm(&g));
            tally.record(gap <= tol, || Violation {
                check: "∇W(t,-u) = -∇W(t,u)".into(),
                t,
                u: u.to_vec(),
                lhs: gap,
                rhs: tol,
            });
            tally
        })
        .reduce(Tally::default, Tally::merge);
    report.absorb(tally);
    report
}

/// Parameters of the sublevel-measure check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckParams {
    pub r0: f64,
    pub level: f64,
    pub centers: Vec<f64>,
    pub subgrid_points: usize,
}

impl Default for CheckParams {
    fn default() -> Self {
        use std::f64::consts::PI;
        CheckParams {
            r0: 1.0,
            level: 2.0,
            centers: [3.0, 10.0, 30.0, 100.0].iter().map(|k| k * PI).collect(),
            subgrid_points: 10_000,
        }
    }
}

/// Runs every condition on the instance's grid with the standard samples.
/// Conditions that cannot be evaluated (e.g. `σ` outside its range) are
/// reported as failed with the reason in `notes`.
pub fn check_instance(inst: &ProblemInstance, params: &CheckParams) -> Vec<ConditionReport> {
    let samples = SampleSet::standard(&inst.grid, inst.dim());
    let field = &inst.field;
    let failed = |c: Condition, e: Error| {
        let mut r = ConditionReport::new(c);
        r.passed = false;
        r.violations = 1;
        r.notes.push(e.to_string());
        r
    };
    let lw2 = check_lw2(
        &|t| field.lower_bound(t),
        params.r0,
        params.level,
        &params.centers,
        params.subgrid_points,
    )
    .map(ConditionReport::from)
    .unwrap_or_else(|e| failed(Condition::Lw2, e));
    vec![
        check_lw1(field, &samples.ts),
        lw2,
        check_hs1(&inst.potential, &inst.grid, &samples).unwrap_or_else(|e| failed(Condition::Hs1, e)),
        check_hs2(&inst.potential, &samples).unwrap_or_else(|e| failed(Condition::Hs2, e)),
        check_hs3(&inst.potential, &samples),
    ]
}
