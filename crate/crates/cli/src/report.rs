//! Run reports and their JSON / CSV / plot-data renderings.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use frachs_core::energy::EnergyBreakdown;
use frachs_core::model::ConditionReport;
use frachs_core::solver::{CoercivityRadius, Method, MinimaxEstimate, Provenance};
use frachs_core::{GridFunction, Solution};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// Bumped whenever a field of [`RunReport`] changes meaning or shape.
pub const SCHEMA_VERSION: &str = "frachs-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub index: usize,
    pub energy: EnergyBreakdown,
    pub residual_norm: f64,
    pub xalpha_norm: f64,
    pub tail_mass: f64,
    pub iterations: usize,
    pub converged: bool,
    pub nontrivial: bool,
    pub certified: bool,
    pub provenance: Provenance,
    pub dim: usize,
    /// Node values, row-major `N × dim`, on the config's grid.
    pub values: Vec<f64>,
}

impl SolutionRecord {
    pub fn new(index: usize, s: &Solution, grad_tol: f64) -> Self {
        SolutionRecord {
            index,
            energy: s.energy,
            residual_norm: s.residual_norm,
            xalpha_norm: s.xalpha_norm,
            tail_mass: s.tail_mass,
            iterations: s.iterations,
            converged: s.converged,
            nontrivial: s.is_nontrivial(),
            certified: s.is_certified(grad_tol),
            provenance: s.provenance.clone(),
            dim: s.u.dim(),
            values: s.u.values().to_vec(),
        }
    }

    pub fn function(&self, config: &ExperimentConfig) -> frachs_core::Result<GridFunction> {
        GridFunction::new(config.instance.grid, self.dim, self.values.clone())
    }
}

/// One minimax level with the a-priori lower bound it is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    #[serde(flatten)]
    pub estimate: MinimaxEstimate,
    /// `−(β_j^θ/θ) ‖b‖ τ^θ`.
    pub lower_bound: f64,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRecord {
    pub j: usize,
    pub beta: f64,
    /// `β_j` measured with twice as many basis functions, when computed.
    pub beta_doubled: Option<f64>,
    pub relative_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub conditions: Vec<ConditionReport>,
    pub solutions: Vec<SolutionRecord>,
    pub c_hat: Vec<LevelRecord>,
    pub beta: Vec<BetaRecord>,
    pub coercivity: Option<CoercivityRadius>,
    /// Human-readable reasons for a nonzero exit status.
    pub failures: Vec<String>,
    /// Wall-clock seconds per phase; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        RunReport {
            version: SCHEMA_VERSION.into(),
            command: command.into(),
            seed: config.seed,
            config: config.clone(),
            conditions: Vec::new(),
            solutions: Vec::new(),
            c_hat: Vec::new(),
            beta: Vec::new(),
            coercivity: None,
            failures: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: RunReport = serde_json::from_str(text).context("malformed report")?;
        if report.version != SCHEMA_VERSION {
            bail!("report schema `{}` is not supported (expected `{SCHEMA_VERSION}`)", report.version);
        }
        Ok(report)
    }
}

/// JSON serialization turns non-finite numbers into `null`, which would not
/// read back; such metrics are dropped and noted instead.
pub fn sanitize_condition(mut r: ConditionReport) -> ConditionReport {
    let bad: Vec<String> = r.metrics.iter().filter(|(_, v)| !v.is_finite()).map(|(k, _)| k.clone()).collect();
    for k in bad {
        let v = r.metrics.remove(&k).unwrap_or(f64::NAN);
        r.notes.push(format!("metric {k} = {v} (not representable in JSON)"));
    }
    if let Some(w) = &r.worst {
        if !(w.lhs.is_finite() && w.rhs.is_finite() && w.t.is_finite() && w.u.iter().all(|x| x.is_finite())) {
            r.notes.push(format!("worst violation: {w:?}"));
            r.worst = None;
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            other => bail!("unknown format `{other}` (supported: json, csv, both)"),
        }
    }
}

fn e17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the report into `dir` and returns the files written.
pub fn export(report: &RunReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    if matches!(format, Format::Json | Format::Both) {
        let path = dir.join("report.json");
        fs::write(&path, report.to_json()?).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    if matches!(format, Format::Csv | Format::Both) {
        written.extend(export_tables(report, dir)?);
    }
    Ok(written)
}

fn export_tables(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();

    let path = dir.join("solutions.csv");
    write_csv(
        &path,
        &[
            "index", "energy", "kinetic", "potential_l", "potential_w", "residual_norm", "xalpha_norm",
            "tail_mass", "iterations", "converged", "nontrivial", "certified", "initializer", "method",
        ],
        report
            .solutions
            .iter()
            .map(|s| {
                vec![
                    s.index.to_string(),
                    e17(s.energy.total),
                    e17(s.energy.kinetic),
                    e17(s.energy.potential_l),
                    e17(s.energy.potential_w),
                    e17(s.residual_norm),
                    e17(s.xalpha_norm),
                    e17(s.tail_mass),
                    s.iterations.to_string(),
                    s.converged.to_string(),
                    s.nontrivial.to_string(),
                    s.certified.to_string(),
                    s.provenance.initializer.clone(),
                    match s.provenance.method {
                        Method::Descent => "descent".into(),
                        Method::Newton => "newton".into(),
                    },
                ]
            })
            .collect(),
    )?;
    written.push(path);

    let path = dir.join("c_hat.csv");
    write_csv(
        &path,
        &["j", "c_hat", "radius", "certified", "restarts", "lower_bound", "bound_holds"],
        report
            .c_hat
            .iter()
            .map(|l| {
                vec![
                    l.estimate.j.to_string(),
                    e17(l.estimate.c_hat),
                    e17(l.estimate.radius),
                    l.estimate.certified.to_string(),
                    l.estimate.restarts.to_string(),
                    e17(l.lower_bound),
                    l.bound_holds.to_string(),
                ]
            })
            .collect(),
    )?;
    written.push(path);

    let path = dir.join("beta.csv");
    write_csv(
        &path,
        &["j", "beta", "beta_doubled", "relative_change"],
        report
            .beta
            .iter()
            .map(|b| {
                let opt = |x: Option<f64>| x.map(e17).unwrap_or_default();
                vec![b.j.to_string(), e17(b.beta), opt(b.beta_doubled), opt(b.relative_change)]
            })
            .collect(),
    )?;
    written.push(path);

    let path = dir.join("conditions.csv");
    write_csv(
        &path,
        &["condition", "passed", "samples", "violations"],
        report
            .conditions
            .iter()
            .map(|c| {
                vec![
                    c.condition.to_string(),
                    c.passed.to_string(),
                    c.samples.to_string(),
                    c.violations.to_string(),
                ]
            })
            .collect(),
    )?;
    written.push(path);

    let grid = report.config.instance.grid;
    for s in &report.solutions {
        let path = dir.join(format!("solution_{}.dat", s.index));
        let mut out = std::io::BufWriter::new(
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        for (k, row) in s.values.chunks(s.dim.max(1)).enumerate() {
            write!(out, "{}", e17(grid.node(k)))?;
            for v in row {
                write!(out, " {}", e17(*v))?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        written.push(path);
    }
    Ok(written)
}
