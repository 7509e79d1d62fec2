//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # coercive_A with a smaller grid
//! instance = coercive_A
//! grid.T = 20
//! grid.N = 1024
//! potential.a = lorentzian(1, 1)
//! multiplicity.k = 3
//! ```
//!
//! `instance` names a builtin to start from (or `custom`, which requires the
//! full instance definition); every other key overrides one field of it.
//! [`ExperimentConfig::to_text`] writes every key, so a printed config parses
//! back to the identical value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use frachs_core::model::{CheckParams, Condition, BUILTIN_NAMES};
use frachs_core::{DiagonalField, Grid, Potential, PotentialLaw, ProblemInstance, Profile, SolverOptions, Weight};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub conditions: Vec<Condition>,
    pub r0: f64,
    pub level: f64,
    pub centers: Vec<f64>,
    pub subgrid_points: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        let p = CheckParams::default();
        CheckConfig {
            conditions: ALL_CONDITIONS.to_vec(),
            r0: p.r0,
            level: p.level,
            centers: p.centers,
            subgrid_points: p.subgrid_points,
        }
    }
}

impl CheckConfig {
    pub fn params(&self) -> CheckParams {
        CheckParams {
            r0: self.r0,
            level: self.level,
            centers: self.centers.clone(),
            subgrid_points: self.subgrid_points,
        }
    }
}

const ALL_CONDITIONS: [Condition; 5] = [
    Condition::Lw1,
    Condition::Lw2,
    Condition::Hs1,
    Condition::Hs2,
    Condition::Hs3,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: ProblemInstance,
    /// `solver.seed` is not read from the text; it mirrors [`Self::seed`].
    pub solver: SolverOptions,
    pub check: CheckConfig,
    /// Number of distinct solutions requested by `multiplicity`.
    pub k: usize,
    /// Minimax levels `ĉ_1..ĉ_{j_max}` estimated by `multiplicity`.
    pub j_max: usize,
    /// Basis functions per coordinate for the `β_j` and minimax studies.
    pub basis_size: usize,
    pub seed: u64,
}

/// Source position of one `key = value` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Span {
    line: usize,
    key_col: usize,
    value_col: usize,
}

struct Entries {
    map: BTreeMap<String, (String, Span)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(String, Span)> {
        self.map.remove(key)
    }

    fn parse<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((v, span)) => f(&v).map(Some).map_err(|message| ConfigError {
                line: span.line,
                column: span.value_col,
                message: format!("`{key}`: {message}"),
            }),
        }
    }
}

fn split_lines(text: &str) -> Result<(Entries, BTreeMap<String, Span>), ConfigError> {
    let mut map = BTreeMap::new();
    let mut spans = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let key_col = content.len() - content.trim_start().len() + 1;
        let Some(eq) = content.find('=') else {
            return Err(ConfigError {
                line,
                column: key_col,
                message: "expected `key = value`".into(),
            });
        };
        let key = content[..eq].trim();
        let rest = &content[eq + 1..];
        let value = rest.trim();
        let value_col = eq + 2 + (rest.len() - rest.trim_start().len());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError {
                line,
                column: key_col,
                message: format!("invalid key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError {
                line,
                column: value_col,
                message: format!("missing value for `{key}`"),
            });
        }
        let span = Span { line, key_col, value_col };
        if let Some((_, first)) = map.insert(key.to_string(), (value.to_string(), span)) {
            return Err(ConfigError {
                line,
                column: key_col,
                message: format!("duplicate key `{key}` (first set on line {})", first.line),
            });
        }
        spans.insert(key.to_string(), span);
    }
    Ok((Entries { map }, spans))
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("expected a number, got `{s}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, got `{s}`"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("expected a nonnegative integer, got `{s}`"))
}

fn flag(s: &str) -> Result<bool, String> {
    s.parse().map_err(|_| format!("expected true or false, got `{s}`"))
}

fn numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| number(x.trim())).collect()
}

/// Splits `name(a, b, ...)` (or a bare `name`) into the name and its numbers.
fn call(s: &str) -> Result<(&str, Vec<f64>), String> {
    match s.find('(') {
        None => Ok((s, Vec::new())),
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| format!("unbalanced parentheses in `{s}`"))?;
            let args = if inner.trim().is_empty() { Vec::new() } else { numbers(inner)? };
            Ok((s[..open].trim(), args))
        }
    }
}

fn arity(name: &str, args: &[f64], n: usize) -> Result<(), String> {
    if args.len() == n {
        Ok(())
    } else {
        Err(format!("`{name}` takes {n} argument(s), got {}", args.len()))
    }
}

fn weight(s: &str) -> Result<Weight, String> {
    let (name, a) = call(s)?;
    match name {
        "lorentzian" => arity(name, &a, 2).map(|_| Weight::Lorentzian { amp: a[0], width: a[1] }),
        "gaussian" => arity(name, &a, 2).map(|_| Weight::Gaussian { amp: a[0], width: a[1] }),
        "constant" => arity(name, &a, 1).map(|_| Weight::Constant { value: a[0] }),
        _ => Err(format!("unknown weight `{name}` (expected lorentzian, gaussian or constant)")),
    }
}

fn profile(s: &str) -> Result<Profile, String> {
    let (name, a) = call(s)?;
    match name {
        "quadratic" => arity(name, &a, 2).map(|_| Profile::Quadratic { c0: a[0], c1: a[1] }),
        "oscillating_quadratic" => {
            arity(name, &a, 2).map(|_| Profile::OscillatingQuadratic { c0: a[0], c1: a[1] })
        }
        "constant" => arity(name, &a, 1).map(|_| Profile::Constant { c: a[0] }),
        _ => Err(format!(
            "unknown profile `{name}` (expected quadratic, oscillating_quadratic or constant)"
        )),
    }
}

/// A law without its weight.
#[derive(Debug, Clone, Copy)]
enum LawShape {
    Zero,
    Power(f64),
    PowerSum(f64, f64),
    OddCubic,
}

fn law(s: &str) -> Result<LawShape, String> {
    let (name, a) = call(s)?;
    match name {
        "zero" => arity(name, &a, 0).map(|_| LawShape::Zero),
        "power" => arity(name, &a, 1).map(|_| LawShape::Power(a[0])),
        "power_sum" => arity(name, &a, 2).map(|_| LawShape::PowerSum(a[0], a[1])),
        "odd_cubic" => arity(name, &a, 0).map(|_| LawShape::OddCubic),
        _ => Err(format!(
            "unknown law `{name}` (expected zero, power, power_sum or odd_cubic)"
        )),
    }
}

fn condition(s: &str) -> Result<Condition, String> {
    ALL_CONDITIONS
        .iter()
        .copied()
        .find(|c| c.to_string() == s)
        .ok_or_else(|| format!("unknown condition `{s}` (expected L_w1, L_w2, HS1, HS2 or HS3)"))
}

fn law_weight(law: &PotentialLaw) -> Option<&Weight> {
    match law {
        PotentialLaw::Zero => None,
        PotentialLaw::Power { weight, .. }
        | PotentialLaw::PowerSum { weight, .. }
        | PotentialLaw::OddCubic { weight } => Some(weight),
    }
}

fn fmt_weight(w: &Weight) -> String {
    match w {
        Weight::Lorentzian { amp, width } => format!("lorentzian({amp}, {width})"),
        Weight::Gaussian { amp, width } => format!("gaussian({amp}, {width})"),
        Weight::Constant { value } => format!("constant({value})"),
    }
}

fn fmt_profile(p: &Profile) -> String {
    match p {
        Profile::Quadratic { c0, c1 } => format!("quadratic({c0}, {c1})"),
        Profile::OscillatingQuadratic { c0, c1 } => format!("oscillating_quadratic({c0}, {c1})"),
        Profile::Constant { c } => format!("constant({c})"),
    }
}

fn fmt_law(l: &PotentialLaw) -> String {
    match l {
        PotentialLaw::Zero => "zero".into(),
        PotentialLaw::Power { exponent, .. } => format!("power({exponent})"),
        PotentialLaw::PowerSum { exponents: (p, q), .. } => format!("power_sum({p}, {q})"),
        PotentialLaw::OddCubic { .. } => "odd_cubic".into(),
    }
}

fn fmt_list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Mixes a label into the master seed so every sub-task gets its own,
/// stable stream (FNV-1a over the label, then a splitmix finalizer).
pub fn sub_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ExperimentConfig {
    /// Builtin instance with default options.
    pub fn builtin(name: &str) -> frachs_core::Result<Self> {
        Ok(ExperimentConfig {
            instance: ProblemInstance::builtin(name)?,
            solver: SolverOptions::default(),
            check: CheckConfig::default(),
            k: 3,
            j_max: 4,
            basis_size: 32,
            seed: 0,
        })
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.solver.seed = seed;
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let (mut e, spans) = split_lines(text)?;
        let at = |key: &str, message: String| {
            let s = spans.get(key).copied().unwrap_or(Span { line: 1, key_col: 1, value_col: 1 });
            ConfigError { line: s.line, column: s.value_col, message }
        };

        let base_name = e.take("instance").map(|(v, _)| v).unwrap_or_else(|| "coercive_A".into());
        let custom = base_name == "custom";
        let mut cfg = if custom {
            None
        } else if BUILTIN_NAMES.contains(&base_name.as_str()) {
            Some(ExperimentConfig::builtin(&base_name).expect("builtin resolves"))
        } else {
            return Err(at(
                "instance",
                format!(
                    "unknown instance `{base_name}` (expected custom or one of {})",
                    BUILTIN_NAMES.join(", ")
                ),
            ));
        };
        let required = |cfg: &Option<ExperimentConfig>, key: &str| -> Result<(), ConfigError> {
            if cfg.is_none() {
                Err(at("instance", format!("`instance = custom` requires `{key}`")))
            } else {
                Ok(())
            }
        };
        let base = cfg.clone();
        let base_inst = base.as_ref().map(|c| &c.instance);

        let half_width = e.parse("grid.T", number)?.or(base_inst.map(|i| i.grid.half_width()));
        let points = e.parse("grid.N", count)?.or(base_inst.map(|i| i.grid.len()));
        let grid = match (half_width, points) {
            (Some(t), Some(n)) => Grid::new(t, n).map_err(|err| {
                let key = if spans.contains_key("grid.N") { "grid.N" } else { "grid.T" };
                at(key, err.to_string())
            })?,
            _ => Grid::new(20.0, 2048).expect("default grid"),
        };

        let alpha = match e.parse("alpha", number)? {
            Some(a) => a,
            None => {
                required(&base, "alpha")?;
                base_inst.unwrap().alpha.value()
            }
        };
        let prof = match e.parse("field.profile", profile)? {
            Some(p) => p,
            None => {
                required(&base, "field.profile")?;
                base_inst.unwrap().field.profile.clone()
            }
        };
        let shifts = e
            .parse("field.shifts", numbers)?
            .or(base_inst.map(|i| i.field.shifts.clone()))
            .unwrap_or_else(|| vec![0.0]);
        let field = DiagonalField::new(prof, shifts).map_err(|err| at("field.shifts", err.to_string()))?;

        let base_pot = base_inst.map(|i| &i.potential);
        let need = |key: &str, v: Option<f64>, from: fn(&Potential) -> f64| -> Result<f64, ConfigError> {
            match v {
                Some(v) => Ok(v),
                None => {
                    required(&base, key)?;
                    Ok(from(base_pot.unwrap()))
                }
            }
        };
        let theta = e.parse("potential.theta", number)?;
        let theta = need("potential.theta", theta, |p| p.theta)?;
        let sigma = e.parse("potential.sigma", number)?;
        let sigma = need("potential.sigma", sigma, |p| p.sigma)?;
        let a = match e.parse("potential.a", weight)? {
            Some(w) => w,
            None => {
                required(&base, "potential.a")?;
                base_pot.unwrap().a.clone()
            }
        };
        let b = match e.parse("potential.b", weight)? {
            Some(w) => w,
            None => {
                required(&base, "potential.b")?;
                base_pot.unwrap().b.clone()
            }
        };
        let shape = e.parse("potential.law", law)?;
        let law_w = e.parse("potential.weight", weight)?;
        let law = match shape {
            None => {
                required(&base, "potential.law")?;
                let mut l = base_pot.unwrap().law.clone();
                if let Some(w) = law_w {
                    match &mut l {
                        PotentialLaw::Zero => {}
                        PotentialLaw::Power { weight, .. }
                        | PotentialLaw::PowerSum { weight, .. }
                        | PotentialLaw::OddCubic { weight } => *weight = w,
                    }
                }
                l
            }
            Some(shape) => {
                let w = law_w
                    .or_else(|| base_pot.and_then(|p| law_weight(&p.law).cloned()))
                    .unwrap_or_else(|| a.clone());
                match shape {
                    LawShape::Zero => PotentialLaw::Zero,
                    LawShape::Power(p) => PotentialLaw::Power { exponent: p, weight: w },
                    LawShape::PowerSum(p, q) => PotentialLaw::PowerSum {
                        exponents: (p, q),
                        weight: w,
                    },
                    LawShape::OddCubic => PotentialLaw::OddCubic { weight: w },
                }
            }
        };
        let potential = Potential {
            law,
            theta,
            sigma,
            a,
            b,
            smoothing: 0.0,
        };

        let name = base_inst.map(|i| i.name.clone()).unwrap_or(base_name);
        let instance = ProblemInstance::new(name, alpha, field, potential, grid).map_err(|err| {
            let key = match &err {
                frachs_core::Error::InvalidOrder(..) => "alpha".to_string(),
                frachs_core::Error::InvalidParameter { name, .. } => [
                    format!("potential.{name}"),
                    format!("field.{name}"),
                    "potential.law".to_string(),
                ]
                .into_iter()
                .find(|k| spans.contains_key(k))
                .unwrap_or_else(|| "instance".into()),
                _ => "instance".into(),
            };
            at(&key, err.to_string())
        })?;

        let mut out = cfg.take().unwrap_or_else(|| ExperimentConfig {
            instance: instance.clone(),
            solver: SolverOptions::default(),
            check: CheckConfig::default(),
            k: 3,
            j_max: 4,
            basis_size: 32,
            seed: 0,
        });
        out.instance = instance;

        let s = &mut out.solver;
        macro_rules! set {
            ($key:literal, $field:expr, $f:expr) => {
                if let Some(v) = e.parse($key, $f)? {
                    $field = v;
                }
            };
        }
        set!("solver.max_iters", s.max_iters, count);
        set!("solver.newton_max_iters", s.newton_max_iters, count);
        set!("solver.grad_tol", s.grad_tol, number);
        set!("solver.backtrack", s.backtrack, number);
        set!("solver.armijo", s.armijo, number);
        set!("solver.deflation_radius", s.deflation_radius, number);
        set!("solver.smoothing", s.smoothing, number);
        set!("solver.precondition", s.precondition, flag);
        set!("solver.basis_initializers", s.basis_initializers, count);
        set!("solver.random_initializers", s.random_initializers, count);
        set!("solver.negate_initializers", s.negate_initializers, flag);
        set!("solver.sphere_restarts", s.sphere_restarts, count);
        if let Err(err) = s.validate() {
            let key = match &err {
                frachs_core::Error::InvalidParameter { name, .. } => format!("solver.{name}"),
                _ => String::new(),
            };
            return Err(at(&key, err.to_string()));
        }

        let c = &mut out.check;
        set!("check.r0", c.r0, number);
        set!("check.level", c.level, number);
        set!("check.centers", c.centers, numbers);
        set!("check.subgrid_points", c.subgrid_points, count);
        if let Some(list) = e.parse("check.conditions", |s| s.split(',').map(|x| condition(x.trim())).collect())? {
            c.conditions = list;
        }

        set!("multiplicity.k", out.k, count);
        set!("multiplicity.j_max", out.j_max, count);
        set!("beta.J", out.basis_size, count);
        if out.k == 0 {
            return Err(at("multiplicity.k", "`multiplicity.k`: k ≥ 1 is required".into()));
        }
        if out.j_max == 0 {
            return Err(at("multiplicity.j_max", "`multiplicity.j_max`: j_max ≥ 1 is required".into()));
        }
        if out.basis_size < 2 {
            return Err(at("beta.J", "`beta.J`: at least 2 basis functions are required".into()));
        }
        let seed = e.parse("seed", |s| s.parse::<u64>().map_err(|_| format!("expected an unsigned 64-bit integer, got `{s}`")))?;
        out.set_seed(seed.unwrap_or(0));

        if let Some((key, (_, span))) = e.map.into_iter().next() {
            return Err(ConfigError {
                line: span.line,
                column: span.key_col,
                message: format!("unknown key `{key}`"),
            });
        }
        Ok(out)
    }

    /// Every key, in a fixed order; parses back to `self`.
    pub fn to_text(&self) -> String {
        let i = &self.instance;
        let p = &i.potential;
        let s = &self.solver;
        let c = &self.check;
        let builtin = BUILTIN_NAMES.contains(&i.name.as_str());
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            writeln!(out, "{k} = {v}").expect("write to string");
        };
        kv("instance", if builtin { i.name.clone() } else { "custom".into() });
        kv("seed", self.seed.to_string());
        kv("alpha", i.alpha.value().to_string());
        kv("grid.T", i.grid.half_width().to_string());
        kv("grid.N", i.grid.len().to_string());
        kv("field.profile", fmt_profile(&i.field.profile));
        kv("field.shifts", fmt_list(&i.field.shifts));
        kv("potential.law", fmt_law(&p.law));
        if let Some(w) = law_weight(&p.law) {
            kv("potential.weight", fmt_weight(w));
        }
        kv("potential.theta", p.theta.to_string());
        kv("potential.sigma", p.sigma.to_string());
        kv("potential.a", fmt_weight(&p.a));
        kv("potential.b", fmt_weight(&p.b));
        kv("solver.max_iters", s.max_iters.to_string());
        kv("solver.newton_max_iters", s.newton_max_iters.to_string());
        kv("solver.grad_tol", s.grad_tol.to_string());
        kv("solver.backtrack", s.backtrack.to_string());
        kv("solver.armijo", s.armijo.to_string());
        kv("solver.deflation_radius", s.deflation_radius.to_string());
        kv("solver.smoothing", s.smoothing.to_string());
        kv("solver.precondition", s.precondition.to_string());
        kv("solver.basis_initializers", s.basis_initializers.to_string());
        kv("solver.random_initializers", s.random_initializers.to_string());
        kv("solver.negate_initializers", s.negate_initializers.to_string());
        kv("solver.sphere_restarts", s.sphere_restarts.to_string());
        kv("check.conditions", fmt_list(&c.conditions));
        kv("check.r0", c.r0.to_string());
        kv("check.level", c.level.to_string());
        kv("check.centers", fmt_list(&c.centers));
        kv("check.subgrid_points", c.subgrid_points.to_string());
        kv("multiplicity.k", self.k.to_string());
        kv("multiplicity.j_max", self.j_max.to_string());
        kv("beta.J", self.basis_size.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_default_builtin() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::builtin("coercive_A").unwrap());
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = ExperimentConfig::parse(
            "instance = noncoercive_B  # B\n\n  grid.N = 512\nseed = 42\npotential.law = zero\ncheck.conditions = L_w2, HS3\n",
        )
        .unwrap();
        assert_eq!(cfg.instance.name, "noncoercive_B");
        assert_eq!(cfg.instance.grid.len(), 512);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.solver.seed, 42);
        assert_eq!(cfg.instance.potential.law, PotentialLaw::Zero);
        assert_eq!(cfg.check.conditions, vec![Condition::Lw2, Condition::Hs3]);
    }

    #[test]
    fn errors_carry_positions() {
        let e = ExperimentConfig::parse("grid.T = 20\n  bogus = 1\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        let e = ExperimentConfig::parse("grid.N =   abc\n").unwrap_err();
        assert_eq!((e.line, e.column), (1, 12));
        let e = ExperimentConfig::parse("seed = 1\nno equals sign\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = ExperimentConfig::parse("seed = 1\nseed = 2\n").unwrap_err();
        assert!(e.message.contains("duplicate"));
        let e = ExperimentConfig::parse("potential.a = lorentzian(1)\n").unwrap_err();
        assert!(e.message.contains("2 argument"));
    }

    #[test]
    fn sigma_above_theta_points_at_sigma() {
        let e = ExperimentConfig::parse("alpha = 0.6\npotential.sigma = 2.5\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("σ"), "{e}");
    }

    #[test]
    fn k_must_be_positive() {
        let e = ExperimentConfig::parse("multiplicity.k = 0").unwrap_err();
        assert!(e.message.contains("k ≥ 1"));
    }

    #[test]
    fn custom_requires_every_instance_key() {
        let e = ExperimentConfig::parse("instance = custom\n").unwrap_err();
        assert!(e.message.contains("requires"));
        let text = "instance = custom\nalpha = 0.7\nfield.profile = constant(2)\nfield.shifts = 0, 0.5\n\
                    potential.law = power_sum(1.5, 1.8)\npotential.weight = gaussian(1, 2)\n\
                    potential.theta = 1.8\npotential.sigma = 1.5\npotential.a = gaussian(1, 2)\n\
                    potential.b = gaussian(3, 2)\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.instance.dim(), 2);
        assert_eq!(cfg.instance.name, "custom");
    }

    #[test]
    fn sub_seeds_differ_by_label() {
        assert_ne!(sub_seed(0, "levels"), sub_seed(0, "multiplicity"));
        assert_eq!(sub_seed(7, "levels"), sub_seed(7, "levels"));
        assert_ne!(sub_seed(7, "levels"), sub_seed(8, "levels"));
    }
}
