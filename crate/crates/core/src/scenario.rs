//! TOML scenarios: parsing, bounds-checked defaults, execution and artifacts.
//!
//! ```toml
//! name = "two_atom_aux"
//! kind = "aux"
//! seed = 7
//! n_max = 16
//!
//! [measure]
//! kind = "atomic"
//! atoms = [[0.0, 0.5], [0.5, 0.5]]
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diagnose::{diagnose_measure, diagnose_weight};
use crate::error::{Error, Result};
use crate::export;
use crate::frames::{bounds_sweep, FrameReport};
use crate::hilbert::{complexify, CMatrix, LinearMap, C64};
use crate::kaczmarz::{auxiliary_sequence, effectiveness_test, row_action_solve, Exponentials, System, Verdict, DEFAULT_SEED};
use crate::measures::{cantor_iterate, space_of, Measure, MAX_CANTOR_LEVEL};
use crate::orbits::{
    build_mainsingular, build_perturbed_conjugate, default_stabilization, dextrodual_orbit, explore_mainsingular_seed,
    seed_from_real, verify_genbackward, verify_kaczmarzclass, verify_prop_exist, verify_s1_eq_g0, verify_tform,
    OrbitOperator,
};
use crate::sampling::{admissible_g0, generic_atomic, random_consistent_system, random_invertible, rng, rotation_like};
use crate::weights::{
    a2_constant, eps_strengthened_check, octave_ms, rm_norm_sweep, weak_a2_constant, Constant, Preset, SweepTrend, Weight,
    EPS_GRID, MAX_PRESET_DEPTH,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const MAX_HORIZON: usize = 65_536;
const MAX_TRIALS: usize = 1000;
const MAX_CELLS: usize = 1 << 16;
const MAX_SWEEPS: usize = 100_000_000;
const MAX_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Aux,
    Orbit,
    Genbackward,
    Kaczmarzclass,
    Mainsingular,
    Weights,
    RmSweep,
    Diagnose,
    Solve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Atomic { atoms: Vec<(f64, f64)> },
    GridWeight { weight: Vec<f64> },
    Cantor { level: u32 },
    /// Seeded generic atoms at `frac(offset + k√2)`.
    Generic { dim: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub preset: Option<String>,
    pub cells: Option<usize>,
    pub values: Option<Vec<f64>>,
    /// One value per line, relative to the scenario file.
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity,
    Diagonal { values: Vec<f64> },
    RotationLike { theta: f64 },
    /// Real entries, row-major.
    Matrix { rows: Vec<Vec<f64>> },
    Random { max_cond: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Explicit { a: Vec<Vec<f64>>, b: Vec<f64> },
    Random { rows: usize, cols: usize, rank: Option<usize>, cond: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub seed: Option<u64>,
    pub measure: Option<MeasureSpec>,
    pub weight: Option<WeightSpec>,
    pub v: Option<OperatorSpec>,
    pub g0: Option<Vec<f64>>,
    pub system: Option<SystemSpec>,
    pub horizon: Option<usize>,
    pub n_max: Option<usize>,
    pub depth: Option<u32>,
    pub ms: Option<Vec<usize>>,
    pub max_m: Option<usize>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
    pub sweeps: Option<usize>,
    pub eps: Option<Vec<f64>>,
    /// Expected verdict; its vocabulary depends on the kind.
    pub expect: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: Value,
    pub requirement: String,
    pub pass: bool,
}

fn at_most(name: &str, observed: f64, limit: f64) -> Check {
    Check {
        name: name.into(),
        observed: json!(observed),
        requirement: format!("<= {limit:e}"),
        pass: observed <= limit,
    }
}

fn equals(name: &str, observed: &str, expected: &str) -> Check {
    Check {
        name: name.into(),
        observed: json!(observed),
        requirement: format!("== {expected}"),
        pass: observed == expected,
    }
}

/// Result of one scenario: the JSON report, named CSV artifacts and the
/// overall verdict.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Value,
    pub artifacts: Vec<(String, String)>,
    pub passed: bool,
}

pub fn parse(text: &str) -> Result<Scenario> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))
}

pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse(&text)
}

fn bounded<T: PartialOrd + std::fmt::Display + Copy>(field: &str, value: Option<T>, default: T, lo: T, hi: T) -> Result<T> {
    let v = value.unwrap_or(default);
    if v < lo || v > hi {
        return Err(Error::Parameter { field: field.into(), reason: format!("{v} outside [{lo}, {hi}]") });
    }
    Ok(v)
}

fn tolerance(value: Option<f64>, default: f64) -> Result<f64> {
    let t = value.unwrap_or(default);
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Parameter { field: "tol".into(), reason: format!("{t} outside (0, 1)") });
    }
    Ok(t)
}

fn missing(field: &str, kind: ScenarioKind) -> Error {
    Error::Parameter { field: field.into(), reason: format!("required for kind {kind:?}") }
}

impl MeasureSpec {
    pub fn build(&self, seed: u64) -> Result<Measure> {
        match self {
            MeasureSpec::Atomic { atoms } => Measure::atomic(atoms.clone()),
            MeasureSpec::GridWeight { weight } => Measure::grid_weight(weight.clone()),
            MeasureSpec::Cantor { level } => {
                if *level > MAX_CANTOR_LEVEL {
                    return Err(Error::CantorLevel { level: *level });
                }
                cantor_iterate(*level)
            }
            MeasureSpec::Generic { dim } => {
                let dim = bounded("measure.dim", Some(*dim), 1, 1, MAX_DIM)?;
                generic_atomic(dim, &mut rng(seed))
            }
        }
    }
}

impl WeightSpec {
    pub fn build(&self, base: &Path) -> Result<Weight> {
        let sources = [self.preset.is_some(), self.values.is_some(), self.csv.is_some()];
        if sources.iter().filter(|b| **b).count() != 1 {
            return Err(Error::Parameter {
                field: "weight".into(),
                reason: "give exactly one of `preset`, `values`, `csv`".into(),
            });
        }
        if let Some(name) = &self.preset {
            let cells = bounded("weight.cells", self.cells, 1024, 1, MAX_CELLS)?;
            return Weight::preset(Preset::parse(name)?, cells);
        }
        if self.cells.is_some() {
            return Err(Error::Parameter { field: "weight.cells".into(), reason: "only valid with `preset`".into() });
        }
        if let Some(values) = &self.values {
            return Weight::new(values.clone());
        }
        let path = base.join(self.csv.as_ref().expect("checked above"));
        let file = std::fs::File::open(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(Weight::from_csv(file)?.with_label(path.display().to_string()))
    }
}

impl OperatorSpec {
    /// `V` on `L²(ν)`.
    pub fn build(&self, nu: &Measure, seed: u64) -> Result<LinearMap> {
        let s = space_of(nu);
        let d = s.dim();
        let square = |m: CMatrix| {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
            }
            LinearMap::on(m, &s)
        };
        match self {
            OperatorSpec::Identity => Ok(LinearMap::identity(&s)),
            OperatorSpec::Diagonal { values } => square(CMatrix::from_diagonal(&complexify(values))),
            OperatorSpec::RotationLike { theta } => square(rotation_like(*theta)),
            OperatorSpec::Matrix { rows } => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Parameter { field: "v.rows".into(), reason: "matrix must be square".into() });
                }
                square(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
            }
            OperatorSpec::Random { max_cond } => {
                if !(*max_cond >= 1.0 && max_cond.is_finite()) {
                    return Err(Error::Parameter { field: "v.max_cond".into(), reason: "must be >= 1".into() });
                }
                Ok(random_invertible(&s, &s, *max_cond, &mut rng(seed ^ 0x5656)))
            }
        }
    }
}

struct Ctx<'a> {
    sc: &'a Scenario,
    seed: u64,
    base: PathBuf,
    checks: Vec<Check>,
    artifacts: Vec<(String, String)>,
    tolerances: serde_json::Map<String, Value>,
    horizons: serde_json::Map<String, Value>,
}

impl Ctx<'_> {
    fn measure(&self) -> Result<Measure> {
        self.sc.measure.as_ref().ok_or_else(|| missing("measure", self.sc.kind))?.build(self.seed)
    }

    fn weight(&self) -> Result<Weight> {
        self.sc.weight.as_ref().ok_or_else(|| missing("weight", self.sc.kind))?.build(&self.base)
    }

    fn operator(&self, nu: &Measure) -> Result<LinearMap> {
        self.sc.v.clone().unwrap_or(OperatorSpec::Identity).build(nu, self.seed)
    }

    fn tol(&mut self, name: &str, value: f64) {
        self.tolerances.insert(name.into(), json!(value));
    }

    fn horizon(&mut self, name: &str, value: usize) {
        self.horizons.insert(name.into(), json!(value));
    }

    fn artifact(&mut self, name: &str, contents: String) {
        self.artifacts.push((name.into(), contents));
    }

    fn expect(&mut self, name: &str, observed: &str, allowed: &[&str], default: Option<&str>) -> Result<()> {
        let expected = match (&self.sc.expect, default) {
            (Some(e), _) => e.as_str(),
            (None, Some(d)) => d,
            (None, None) => return Ok(()),
        };
        if !allowed.contains(&expected) {
            return Err(Error::Parameter {
                field: "expect".into(),
                reason: format!("`{expected}` is not one of {}", allowed.join(", ")),
            });
        }
        self.checks.push(equals(name, observed, expected));
        Ok(())
    }

    fn stabilized(&mut self, t: &OrbitOperator) -> Result<usize> {
        match self.sc.horizon {
            Some(h) => bounded("horizon", Some(h), h, 1, MAX_HORIZON),
            None => {
                let st = default_stabilization(t);
                self.horizons.insert("stabilization_change".into(), json!(st.change));
                self.horizons.insert("stabilized".into(), json!(st.stable));
                Ok(st.horizon)
            }
        }
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::EffectiveWithinTolerance => "effective_within_tolerance",
        Verdict::NotEffective => "not_effective",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// Doubling horizons from 16 up to `h`, always ending at `h`.
fn doubling(h: usize, dim: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(16usize.max(dim)), |x| Some(x * 2))
        .take_while(|x| *x < h)
        .collect();
    out.push(h.max(dim));
    out
}

fn orbit_bounds(t: &OrbitOperator, h: usize) -> Result<Vec<FrameReport>> {
    bounds_sweep(&t.frame_sequence(), &doubling(h, t.space().dim()))
}

fn run_aux(c: &mut Ctx) -> Result<Value> {
    let nu = c.measure()?;
    let n_max = bounded("n_max", c.sc.n_max, 64, 1, MAX_HORIZON)?;
    let trials = bounded("trials", c.sc.trials, 8, 1, MAX_TRIALS)?;
    let tol = tolerance(c.sc.tol, 1e-9)?;
    c.tol("effectiveness", tol);
    c.horizon("n_max", n_max);
    let s = space_of(&nu);
    let e = Exponentials::new(&nu);
    let g = auxiliary_sequence(&e, n_max, &s)?;
    let eff = effectiveness_test(System::Classic(&e), &s, trials, n_max, tol, c.seed)?;
    c.artifact("aux.csv", export::aux_csv(g.vectors())?);
    c.artifact("effectiveness.csv", export::effectiveness_csv(&eff.residual_curve)?);
    c.expect(
        "effectiveness_verdict",
        verdict_name(eff.verdict),
        &["effective_within_tolerance", "not_effective", "inconclusive"],
        Some("effective_within_tolerance"),
    )?;
    Ok(json!({
        "dim": nu.dim(),
        "max_residual": eff.max_residual,
        "parseval_defect": eff.parseval_defect,
        "decade_slope": eff.decade_slope,
        "verdict": eff.verdict,
    }))
}

fn run_orbit(c: &mut Ctx) -> Result<Value> {
    let nu = c.measure()?;
    let v = c.operator(&nu)?;
    let b = build_perturbed_conjugate(&v, &nu)?;
    let h = c.stabilized(&b.t)?;
    let trials = bounded("trials", c.sc.trials, 10, 1, MAX_TRIALS)?;
    let tol = tolerance(c.sc.tol, 1e-6)?;
    c.tol("frame_identity", tol);
    c.tol("bound_relative_error", 1e-4);
    c.horizon("horizon", h);
    let r = verify_tform(&b, h, trials, c.seed)?;
    c.checks.push(at_most("frame_identity_defect", r.frame_identity_defect, tol));
    c.checks.push(at_most("bound_relative_error", r.bound_relative_error, 1e-4));
    c.checks.push(at_most("rank_one_ratio", r.rank_one_ratio, 1e-10));
    c.artifact("bounds.csv", export::bounds_csv(&orbit_bounds(&b.t, h)?)?);
    Ok(json!({ "condition": b.condition, "tform": r }))
}

fn run_genbackward(c: &mut Ctx) -> Result<Value> {
    let nu = c.measure()?;
    let v = c.operator(&nu)?;
    let b = build_perturbed_conjugate(&v, &nu)?;
    let h = bounded("horizon", c.sc.horizon, 200, 1, MAX_HORIZON)?;
    let trials = bounded("trials", c.sc.trials, 4, 1, MAX_TRIALS)?;
    let tol = tolerance(c.sc.tol, 1e-6)?;
    let max_m = bounded("max_m", c.sc.max_m, 200, 1, MAX_HORIZON)?;
    c.tol("pair_effectiveness", tol);
    c.tol("unitarity", 1e-10);
    c.tol("agreement", 1e-8);
    c.horizon("horizon", h);
    c.horizon("max_m", max_m);
    let g = verify_genbackward(&b, h, trials, tol, c.seed)?;
    let (_, d) = dextrodual_orbit(&b, max_m, trials, c.seed)?;
    c.checks.push(at_most("unitarity_defect", g.unitarity_defect, 1e-10));
    c.checks.push(at_most("agreement", g.agreement, 1e-8));
    c.expect(
        "pair_effectiveness",
        verdict_name(g.pair_effectiveness.verdict),
        &["effective_within_tolerance", "not_effective", "inconclusive"],
        Some("effective_within_tolerance"),
    )?;
    c.artifact("effectiveness.csv", export::effectiveness_csv(&g.pair_effectiveness.residual_curve)?);
    c.artifact("growth.csv", export::growth_csv(&d.growth_curve)?);
    Ok(json!({
        "unitarity_defect": g.unitarity_defect,
        "agreement": g.agreement,
        "pair_verdict": g.pair_effectiveness.verdict,
        "pair_residual": g.pair_effectiveness.max_residual,
        "dextrodual_residual": d.reconstruction_residual,
        "growth_route_gap": d.route_gap,
    }))
}

fn run_kaczmarzclass(c: &mut Ctx) -> Result<Value> {
    let nu = c.measure()?;
    let v = c.operator(&nu)?;
    let b = build_perturbed_conjugate(&v, &nu)?;
    let h = c.stabilized(&b.t)?;
    let tol = tolerance(c.sc.tol, 1e-6)?;
    c.tol("parseval", tol);
    c.tol("aux_agreement", 1e-8);
    c.horizon("horizon", h);
    let k = verify_kaczmarzclass(&b, h)?;
    c.checks.push(at_most("parseval_defect", k.parseval_defect, tol));
    c.checks.push(at_most("aux_agreement", k.aux_agreement, 1e-8));
    c.checks.push(equals("equivalence_agrees", &k.equivalence_agrees.to_string(), "true"));
    c.artifact("bounds.csv", export::bounds_csv(&orbit_bounds(&b.t, h)?)?);
    Ok(json!(k))
}

fn run_mainsingular(c: &mut Ctx) -> Result<Value> {
    let mu = c.measure()?;
    let g0 = match &c.sc.g0 {
        Some(values) => {
            if values.len() != mu.dim() {
                return Err(Error::DimensionMismatch { expected: mu.dim(), found: values.len() });
            }
            seed_from_real(values)
        }
        None => admissible_g0(&mu, &mut rng(c.seed)),
    };
    if g0.iter().any(|z| z.re <= 0.0) {
        let h = bounded("horizon", c.sc.horizon, 512, 1, MAX_HORIZON)?;
        c.horizon("horizon", h);
        let r = explore_mainsingular_seed(&mu, &g0, h)?;
        return Ok(json!({ "exploratory": r }));
    }
    let t = build_mainsingular(&mu, &g0)?;
    let h = c.stabilized(&t)?;
    let trials = bounded("trials", c.sc.trials, 4, 1, MAX_TRIALS)?;
    c.horizon("horizon", h);
    for (name, tol) in [("s1", 1e-8), ("multiplication", 1e-6), ("pairing", 1e-9), ("prop_exist", 1e-10)] {
        c.tol(name, tol);
    }
    let s1 = verify_s1_eq_g0(&t, h)?;
    let p = verify_prop_exist(&mu, &g0, h, trials, c.seed)?;
    c.checks.push(at_most("s1_defect", s1.s1_defect, 1e-8));
    if let Some(m) = s1.multiplication_defect {
        c.checks.push(at_most("multiplication_defect", m, 1e-6));
    }
    c.checks.push(at_most("s1_pairing_defect", s1.s1_pairing_defect, 1e-9));
    c.checks.push(at_most("prop_exist_discrepancy", p.discrepancy, 1e-10));
    c.artifact("bounds.csv", export::bounds_csv(&orbit_bounds(&t, h)?)?);
    c.artifact("aux.csv", export::aux_csv(&t.orbit(h.min(64)))?);
    Ok(json!({ "g0": g0.iter().map(|z| z.re).collect::<Vec<_>>(), "s1": s1, "prop_exist": p }))
}

fn depth(c: &Ctx, default: u32) -> Result<u32> {
    bounded("depth", c.sc.depth, default, 1, MAX_PRESET_DEPTH)
}

fn constant_name(k: Constant) -> &'static str {
    if k.is_finite() { "finite" } else { "infinite" }
}

fn run_weights(c: &mut Ctx) -> Result<Value> {
    let w = c.weight()?;
    let d = depth(c, 10)?;
    c.horizon("depth", d as usize);
    let eps: Vec<f64> = c.sc.eps.clone().unwrap_or_else(|| EPS_GRID.to_vec());
    let weak = weak_a2_constant(&w, d)?;
    let classical = a2_constant(&w, d)?;
    let mut panel = Vec::new();
    for e in &eps {
        let r = eps_strengthened_check(&w, *e, d)?;
        panel.push(json!({ "eps": e, "constant": r.eps_constant, "trend": r.refinement_trend }));
    }
    c.artifact("a2.csv", export::a2_csv(&weak.levels)?);
    c.artifact("a2_classical.csv", export::a2_csv(&classical.levels)?);
    c.expect("weak_a2", constant_name(weak.weak_a2_constant), &["finite", "infinite"], None)?;
    Ok(json!({
        "weight": w.label(),
        "cells": w.cells(),
        "weak": weak.weak_a2_constant,
        "weak_trend": weak.refinement_trend,
        "weak_argmax": weak.argmax_interval,
        "classical": classical.a2_constant,
        "classical_trend": classical.refinement_trend,
        "eps_panel": panel,
    }))
}

fn run_rm_sweep(c: &mut Ctx) -> Result<Value> {
    let w = c.weight()?;
    let ms = match &c.sc.ms {
        Some(ms) => ms.clone(),
        None => octave_ms(128.min(w.cells() / 4)),
    };
    c.horizon("max_m", ms.last().copied().unwrap_or(0));
    let sweep = rm_norm_sweep(&w, &ms)?;
    c.artifact("rm.csv", export::rm_csv(&sweep)?);
    let trend = match sweep.trend {
        SweepTrend::Bounded => "bounded",
        SweepTrend::Growing => "growing",
    };
    c.expect("rm_trend", trend, &["bounded", "growing"], None)?;
    Ok(json!(sweep))
}

fn run_diagnose(c: &mut Ctx) -> Result<Value> {
    let max_m = bounded("max_m", c.sc.max_m, 64, 4, MAX_CELLS / 4)?;
    c.horizon("max_m", max_m);
    let weight = match (&c.sc.weight, &c.sc.measure) {
        (Some(_), Some(_)) => {
            return Err(Error::Parameter { field: "weight".into(), reason: "give a weight or a measure, not both".into() })
        }
        (Some(_), None) => Some(c.weight()?),
        (None, Some(MeasureSpec::GridWeight { weight })) => Some(Weight::new(weight.clone())?),
        (None, Some(_)) => None,
        (None, None) => return Err(missing("weight", c.sc.kind)),
    };
    let allowed = ["frame", "bessel_only", "lower_semi_frame_only", "neither"];
    match weight {
        Some(w) => {
            let d = depth(c, 10)?;
            c.horizon("depth", d as usize);
            let r = diagnose_weight(&w, d, max_m)?;
            c.artifact("exp_bounds.csv", export::exp_bounds_csv(&r.measured)?);
            c.expect("classification", r.classification.name(), &allowed, None)?;
            Ok(json!(r))
        }
        None => {
            let nu = c.measure()?;
            let r = diagnose_measure(&nu, max_m)?;
            c.artifact("exp_bounds.csv", export::exp_bounds_csv(&r.measured)?);
            c.expect("classification", r.classification.name(), &allowed, None)?;
            Ok(json!(r))
        }
    }
}

fn run_solve(c: &mut Ctx) -> Result<Value> {
    let spec = c.sc.system.clone().ok_or_else(|| missing("system", c.sc.kind))?;
    let (a, b, cond_hint) = match spec {
        SystemSpec::Explicit { a, b } => {
            let rows = a.len();
            let cols = a.first().map_or(0, |r| r.len());
            if rows == 0 || cols == 0 || a.iter().any(|r| r.len() != cols) {
                return Err(Error::Parameter { field: "system.a".into(), reason: "ragged or empty matrix".into() });
            }
            if b.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, found: b.len() });
            }
            let m = CMatrix::from_fn(rows, cols, |i, j| C64::new(a[i][j], 0.0));
            (m, complexify(&b), None)
        }
        SystemSpec::Random { rows, cols, rank, cond } => {
            let rows = bounded("system.rows", Some(rows), 1, 1, 512)?;
            let cols = bounded("system.cols", Some(cols), 1, 1, 512)?;
            let cond = bounded("system.cond", Some(cond), 1.0, 1.0, 1e12)?;
            let (a, b) = random_consistent_system(rows, cols, rank.unwrap_or(rows.min(cols)), cond, &mut rng(c.seed));
            (a, b, Some(cond))
        }
    };
    let default_sweeps = cond_hint.map_or(100_000, |k| ((10.0 * a.ncols() as f64 * k).ceil() as usize).min(MAX_SWEEPS));
    let sweeps = bounded("sweeps", c.sc.sweeps, default_sweeps, 1, MAX_SWEEPS)?;
    let tol = tolerance(c.sc.tol, 1e-8)?;
    c.tol("residual", tol);
    c.horizon("sweeps", sweeps);
    let r = row_action_solve(&a, &b, sweeps, tol)?;
    c.checks.push(at_most("residual", r.residual, tol));
    c.artifact("solution.csv", export::vector_csv(&r.x)?);
    Ok(json!({ "rows": a.nrows(), "cols": a.ncols(), "sweeps": r.sweeps, "residual": r.residual, "converged": r.converged }))
}

/// Runs a scenario. `base` resolves relative paths; `seed` overrides the
/// scenario's seed.
pub fn run(sc: &Scenario, base: &Path, seed: Option<u64>) -> Result<Outcome> {
    let start = Instant::now();
    let seed = seed.or(sc.seed).unwrap_or(DEFAULT_SEED);
    let mut c = Ctx {
        sc,
        seed,
        base: base.to_path_buf(),
        checks: Vec::new(),
        artifacts: Vec::new(),
        tolerances: serde_json::Map::new(),
        horizons: serde_json::Map::new(),
    };
    let result = match sc.kind {
        ScenarioKind::Aux => run_aux(&mut c),
        ScenarioKind::Orbit => run_orbit(&mut c),
        ScenarioKind::Genbackward => run_genbackward(&mut c),
        ScenarioKind::Kaczmarzclass => run_kaczmarzclass(&mut c),
        ScenarioKind::Mainsingular => run_mainsingular(&mut c),
        ScenarioKind::Weights => run_weights(&mut c),
        ScenarioKind::RmSweep => run_rm_sweep(&mut c),
        ScenarioKind::Diagnose => run_diagnose(&mut c),
        ScenarioKind::Solve => run_solve(&mut c),
    }?;
    let passed = c.checks.iter().all(|k| k.pass);
    let report = json!({
        "name": sc.name,
        "kind": sc.kind,
        "version": VERSION,
        "modules": modules(),
        "seed": seed,
        "tolerances": c.tolerances,
        "horizons": c.horizons,
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
        "passed": passed,
        "checks": c.checks,
        "artifacts": c.artifacts.iter().map(|a| a.0.clone()).collect::<Vec<_>>(),
        "result": result,
    });
    Ok(Outcome { report, artifacts: c.artifacts, passed })
}

pub fn modules() -> Value {
    let names = ["hilbert", "measures", "kaczmarz", "frames", "orbits", "weights", "scenario"];
    Value::Object(names.iter().map(|n| (n.to_string(), json!(VERSION))).collect())
}

/// Scenarios used for the determinism check and shipped as examples.
pub const BUILTIN: &[(&str, &str)] = &[
    (
        "two_atom_aux",
        r#"name = "two_atom_aux"
kind = "aux"
seed = 7
n_max = 16
tol = 1e-12

[measure]
kind = "atomic"
atoms = [[0.0, 0.5], [0.5, 0.5]]
"#,
    ),
    (
        "cantor_orbit",
        r#"name = "cantor_orbit"
kind = "orbit"
seed = 11
horizon = 256

[measure]
kind = "cantor"
level = 2

[v]
kind = "random"
max_cond = 20.0
"#,
    ),
    (
        "diagonal_genbackward",
        r#"name = "diagonal_genbackward"
kind = "genbackward"
seed = 3
horizon = 32
max_m = 64
tol = 1e-10

[measure]
kind = "atomic"
atoms = [[0.0, 0.5], [0.5, 0.5]]

[v]
kind = "diagonal"
values = [1.0, 2.0]
"#,
    ),
    (
        "linear_x_weights",
        r#"name = "linear_x_weights"
kind = "weights"
depth = 8
expect = "infinite"

[weight]
preset = "linear_x"
"#,
    ),
    (
        "inv_sqrt_x_rm",
        r#"name = "inv_sqrt_x_rm"
kind = "rm_sweep"
ms = [4, 8, 16, 32, 64]

[weight]
preset = "inv_sqrt_x"
cells = 1024
"#,
    ),
    (
        "step_diagnose",
        r#"name = "step_diagnose"
kind = "diagnose"
depth = 6
max_m = 32
expect = "frame"

[weight]
values = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
          1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
          1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
          1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
          4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0,
          4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0,
          4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0,
          4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0]
"#,
    ),
    (
        "random_solve",
        r#"name = "random_solve"
kind = "solve"
seed = 5
tol = 1e-8

[system]
kind = "random"
rows = 12
cols = 8
cond = 10.0
"#,
    ),
];

/// Runs every built-in scenario and returns `(scenario/file, contents)` for
/// each CSV artifact.
pub fn reference_artifacts() -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (name, text) in BUILTIN {
        let sc = parse(text)?;
        let o = run(&sc, Path::new("."), None)?;
        for (file, contents) in o.artifacts {
            out.push((format!("{name}/{file}"), contents));
        }
    }
    Ok(out)
}
