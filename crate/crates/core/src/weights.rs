//! Weights on `[0,1)`: weak and classical A₂ scans, Dirichlet kernels, the
//! symmetric partial-sum operators `R_M` on weighted grids and frame bounds of
//! exponentials in `L²(w dx)`.
//!
//! A weight is piecewise constant on the uniform `K`-partition. Presets also
//! carry a closed form, so they can be re-resolved at any number of cells with
//! exact cell averages.

use std::f64::consts::PI;
use std::io::Read;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, LinearMap, Space, C64};
use crate::measures::{cell_average_factor, grid_phase, Measure};

/// Relative increase between consecutive levels that counts as growth.
pub const TREND_TOL: f64 = 0.01;
/// ε grid for the strengthened condition.
pub const EPS_GRID: [f64; 4] = [0.1, 0.25, 0.5, 1.0];
/// Factor in `C ≤ 256·sup‖R_M‖²` over dyadic intervals with `|I| ≤ 1/8`.
pub const MTHM_FACTOR: f64 = 256.0;
/// Log-log slope over the last octave above which an `R_M` sweep is growing.
pub const RM_PLATEAU_SLOPE: f64 = 0.01;
/// Finest preset resolution `2^depth` used by scans.
pub const MAX_PRESET_DEPTH: u32 = 14;
/// Dyadic levels allowed for raw weights.
pub const MAX_RAW_DEPTH: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Constant,
    LinearX,
    InvSqrtX,
    HalfIndicator,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Constant,
        Preset::LinearX,
        Preset::InvSqrtX,
        Preset::HalfIndicator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Constant => "constant",
            Preset::LinearX => "linear_x",
            Preset::InvSqrtX => "inv_sqrt_x",
            Preset::HalfIndicator => "half_indicator",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Preset::Constant => "w(x) = 1",
            Preset::LinearX => "w(x) = x",
            Preset::InvSqrtX => "w(x) = x^(-1/2)",
            Preset::HalfIndicator => "w(x) = 1 on [0,1/2), 0 on [1/2,1)",
        }
    }

    pub fn parse(name: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::InvalidWeight(format!("unknown preset `{name}`")))
    }

    fn shape(self) -> Shape {
        match self {
            Preset::Constant => Shape::Power(0.0),
            Preset::LinearX => Shape::Power(1.0),
            Preset::InvSqrtX => Shape::Power(-0.5),
            Preset::HalfIndicator => Shape::HalfIndicator,
        }
    }
}

/// Closed forms: `x^p` or the indicator of `[0,½)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Power(f64),
    HalfIndicator,
}

impl Shape {
    fn pow(self, q: f64) -> Shape {
        match self {
            Shape::Power(p) => Shape::Power(p * q),
            Shape::HalfIndicator => Shape::HalfIndicator,
        }
    }

    /// Exact cell averages on `cells` cells; `None` if not integrable near 0.
    fn resolve(self, cells: usize) -> Option<Vec<f64>> {
        match self {
            Shape::Power(p) if p <= -1.0 => None,
            Shape::Power(p) if p == 0.0 => Some(vec![1.0; cells]),
            Shape::Power(p) => Some((0..cells).map(|k| power_cell_average(p, k, cells)).collect()),
            Shape::HalfIndicator => Some(
                (0..cells)
                    .map(|k| {
                        let a = k as f64 / cells as f64;
                        let b = (k + 1) as f64 / cells as f64;
                        ((b.min(0.5) - a).max(0.0)) * cells as f64
                    })
                    .collect(),
            ),
        }
    }
}

/// `K ∫_{k/K}^{(k+1)/K} x^p dx` for `p > −1`.
fn power_cell_average(p: f64, k: usize, cells: usize) -> f64 {
    let q = p + 1.0;
    let kf = cells as f64;
    if k == 0 {
        return (1.0 / kf).powf(p) / q;
    }
    // a^q((1+1/k)^q − 1) without cancellation.
    let a = k as f64 / kf;
    let diff = a.powf(q) * (q * (1.0 / k as f64).ln_1p()).exp_m1();
    kf * diff / q
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    values: Vec<f64>,
    shape: Option<Shape>,
    label: String,
}

impl Weight {
    pub fn new(values: Vec<f64>) -> Result<Weight> {
        validate(&values)?;
        Ok(Weight { values, shape: None, label: "custom".into() })
    }

    pub fn preset(p: Preset, cells: usize) -> Result<Weight> {
        if cells == 0 {
            return Err(Error::InvalidWeight("at least one cell is required".into()));
        }
        let values = p.shape().resolve(cells).expect("presets are integrable");
        Ok(Weight { values, shape: Some(p.shape()), label: p.name().into() })
    }

    /// One value per line; blank lines are skipped.
    pub fn from_csv<R: Read>(reader: R) -> Result<Weight> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut values = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 1 {
                return Err(Error::Parse(format!(
                    "weight line {}: expected one value, found {}",
                    line + 1,
                    record.len()
                )));
            }
            let v: f64 = record[0]
                .parse()
                .map_err(|_| Error::Parse(format!("weight line {}: `{}` is not a number", line + 1, &record[0])))?;
            values.push(v);
        }
        Weight::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn shape(&self) -> Option<Shape> {
        self.shape
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Weight {
        self.label = label.into();
        self
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&k| self.values[k] > 0.0).collect()
    }

    /// `c·w`; drops nothing, keeps the closed form up to scale.
    pub fn scaled(&self, c: f64) -> Result<Weight> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidWeight(format!("scale {c} must be positive")));
        }
        let values = self.values.iter().map(|v| v * c).collect();
        Ok(Weight { values, shape: None, label: format!("{}*{c}", self.label) })
    }

    /// `χ_{w>0}/w`, cellwise.
    pub fn reciprocal_on_support(&self) -> Weight {
        let values = self.values.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 0.0 }).collect();
        Weight { values, shape: None, label: format!("1/({})", self.label) }
    }

    /// `w^q`. `None` when the closed form is not integrable near 0.
    pub fn powered(&self, q: f64) -> Option<Weight> {
        match self.shape {
            Some(shape) => {
                let s = shape.pow(q);
                s.resolve(self.cells()).map(|values| Weight {
                    values,
                    shape: Some(s),
                    label: format!("({})^{q}", self.label),
                })
            }
            None => Some(Weight {
                values: self.values.iter().map(|v| v.powf(q)).collect(),
                shape: None,
                label: format!("({})^{q}", self.label),
            }),
        }
    }

    /// The same weight on `cells` cells: exact for closed forms, otherwise
    /// only the identity resolution is available.
    pub fn resolved(&self, cells: usize) -> Result<Weight> {
        if cells == self.cells() {
            return Ok(self.clone());
        }
        match self.shape {
            Some(s) => {
                let values = s
                    .resolve(cells)
                    .ok_or_else(|| Error::InvalidWeight("closed form is not integrable".into()))?;
                Ok(Weight { values, shape: Some(s), label: self.label.clone() })
            }
            None => Err(Error::InvalidWeight(format!(
                "custom weight has fixed resolution {} (requested {cells})",
                self.cells()
            ))),
        }
    }

    /// The absolutely continuous measure `w dx`.
    pub fn to_measure(&self) -> Result<Measure> {
        Measure::grid_weight(self.values.clone())
    }

    /// `L²(w dx)` on the support cells.
    pub fn space(&self) -> Result<Space> {
        let k = self.cells() as f64;
        let weights: Vec<f64> = self.support().iter().map(|&i| self.values[i] / k).collect();
        Space::diagonal(&weights)
    }
}

fn validate(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidWeight("no cells".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidWeight(format!("value {v} is negative or not finite")));
    }
    if !values.iter().any(|v| *v > 0.0) {
        return Err(Error::InvalidWeight("weight vanishes identically".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dirichlet kernel

/// `D_M(t) = sin(π(2M+1)t)/sin(πt)`, with the limit `2M+1` at integers.
pub fn dirichlet_kernel(m: u64, t: f64) -> f64 {
    let n = (2 * m + 1) as f64;
    let r = t - t.round();
    let x = PI * r;
    if (n * x).abs() < 1e-7 {
        return n * (1.0 - (n * n - 1.0) * x * x / 6.0);
    }
    (n * x).sin() / x.sin()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletReport {
    pub n_max: u64,
    pub samples_per_n: usize,
    pub min_ratio: f64,
    pub argmin: (u64, f64),
    pub violations: Vec<(u64, f64)>,
    pub passed: bool,
}

/// Samples `D_N(t)/N` on a uniform grid of `|t| ≤ 1/(8N)` for `N ≤ n_max`.
pub fn check_dirichlet_bound(n_max: u64, samples_per_n: usize) -> Result<DirichletReport> {
    if n_max < 1 {
        return Err(Error::Parameter { field: "n_max".into(), reason: "must be at least 1".into() });
    }
    if samples_per_n < 2 {
        return Err(Error::Parameter { field: "samples_per_n".into(), reason: "must be at least 2".into() });
    }
    let mut min_ratio = f64::INFINITY;
    let mut argmin = (1, 0.0);
    let mut violations = Vec::new();
    for n in 1..=n_max {
        let half = 1.0 / (8.0 * n as f64);
        for i in 0..samples_per_n {
            let t = -half + 2.0 * half * i as f64 / (samples_per_n - 1) as f64;
            let ratio = dirichlet_kernel(n, t) / n as f64;
            if ratio < min_ratio {
                min_ratio = ratio;
                argmin = (n, t);
            }
            if ratio < 1.0 {
                violations.push((n, t));
            }
        }
    }
    Ok(DirichletReport {
        n_max,
        samples_per_n,
        min_ratio,
        argmin,
        passed: violations.is_empty(),
        violations,
    })
}

// ---------------------------------------------------------------------------
// A₂ scans

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Constant {
    Finite(f64),
    Infinite,
}

impl Constant {
    pub fn is_finite(self) -> bool {
        matches!(self, Constant::Finite(_))
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Constant::Finite(v) => Some(v),
            Constant::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Stable,
    Growing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    Weak,
    Classical,
    Strengthened,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelScan {
    pub level: u32,
    pub constant: Constant,
    pub argmax: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    pub weight: String,
    pub mode: ScanMode,
    pub weak_a2_constant: Constant,
    pub a2_constant: Constant,
    pub eps: Option<f64>,
    pub eps_constant: Option<Constant>,
    pub scan_depth: u32,
    /// Interval attaining the primary constant at the deepest level.
    pub argmax_interval: (f64, f64),
    pub refinement_trend: Trend,
    /// Primary constant per level.
    pub levels: Vec<LevelScan>,
}

struct Scan {
    constant: Constant,
    trend: Trend,
    argmax: (f64, f64),
    levels: Vec<LevelScan>,
}

struct Grid {
    values: Vec<f64>,
    inverse: Vec<f64>,
    pw: Vec<f64>,
    pinv: Vec<f64>,
}

impl Grid {
    /// `None` if the classical inverse is not integrable (a zero cell).
    fn new(values: Vec<f64>, classical: bool) -> Option<Grid> {
        if classical && values.iter().any(|v| *v == 0.0) {
            return None;
        }
        let inverse: Vec<f64> = values.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 0.0 }).collect();
        let pw = prefix(&values);
        let pinv = prefix(&inverse);
        Some(Grid { values, inverse, pw, pinv })
    }

    fn cells(&self) -> usize {
        self.values.len()
    }

    /// Cell-weighted antiderivative scaled by `K`.
    fn at(prefix: &[f64], values: &[f64], x: f64) -> f64 {
        let k = values.len();
        let t = x * k as f64;
        if t >= k as f64 {
            return prefix[k];
        }
        let i = t.floor() as usize;
        prefix[i] + (t - i as f64) * values[i]
    }

    fn product(&self, a: f64, b: f64) -> f64 {
        let k = self.cells() as f64;
        let iw = Grid::at(&self.pw, &self.values, b) - Grid::at(&self.pw, &self.values, a);
        if iw <= 0.0 {
            return 0.0;
        }
        let iv = Grid::at(&self.pinv, &self.inverse, b) - Grid::at(&self.pinv, &self.inverse, a);
        let len = (b - a) * k;
        iw * iv / (len * len)
    }

    fn dyadic_sup(&self, min_level: u32, max_level: u32) -> (f64, (f64, f64)) {
        let mut best = (0.0, (0.0, 1.0));
        for level in min_level..=max_level {
            let count = 1u64 << level;
            for i in 0..count {
                let a = i as f64 / count as f64;
                let b = (i + 1) as f64 / count as f64;
                let p = self.product(a, b);
                if p > best.0 {
                    best = (p, (a, b));
                }
            }
        }
        best
    }

    fn aligned_sup(&self) -> (f64, (f64, f64)) {
        let k = self.cells();
        let mut best = (0.0, (0.0, 1.0));
        for i in 0..k {
            let (wi, vi) = (self.pw[i], self.pinv[i]);
            for j in i + 1..=k {
                let iw = self.pw[j] - wi;
                if iw <= 0.0 {
                    continue;
                }
                let len = (j - i) as f64;
                let p = iw * (self.pinv[j] - vi) / (len * len);
                if p > best.0 {
                    best = (p, (i as f64 / k as f64, j as f64 / k as f64));
                }
            }
        }
        best
    }
}

fn prefix(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for v in values {
        acc += v;
        out.push(acc);
    }
    out
}

fn check_depth(w: &Weight, depth: u32) -> Result<()> {
    let cap = if w.shape.is_some() { MAX_PRESET_DEPTH } else { MAX_RAW_DEPTH };
    if depth < 1 || depth > cap {
        return Err(Error::Parameter {
            field: "depth".into(),
            reason: format!("must lie in 1..={cap}, found {depth}"),
        });
    }
    Ok(())
}

/// Closed forms are resolved at `2^level` cells; custom weights keep their
/// cells and add dyadic levels.
fn scan(w: &Weight, depth: u32, classical: bool) -> Scan {
    let mut levels = Vec::with_capacity(depth as usize + 1);
    let raw_grid = match w.shape {
        None => Grid::new(w.values.clone(), classical),
        Some(_) => None,
    };
    let raw_aligned = raw_grid.as_ref().map(Grid::aligned_sup);
    for level in 0..=depth {
        let outcome = match (w.shape, &raw_grid) {
            (Some(shape), _) => shape
                .resolve(1usize << level)
                .and_then(|values| Grid::new(values, classical))
                .map(|g| {
                    let d = g.dyadic_sup(0, level);
                    let c = g.aligned_sup();
                    if c.0 > d.0 { c } else { d }
                }),
            (None, Some(g)) => {
                let d = g.dyadic_sup(0, level);
                let c = raw_aligned.expect("computed with the grid");
                Some(if c.0 > d.0 { c } else { d })
            }
            (None, None) => None,
        };
        levels.push(match outcome {
            Some((c, argmax)) => LevelScan { level, constant: Constant::Finite(c), argmax },
            None => LevelScan { level, constant: Constant::Infinite, argmax: (0.0, 1.0) },
        });
    }
    let last = &levels[levels.len() - 1];
    let prev = &levels[levels.len() - 2];
    let trend = match (prev.constant, last.constant) {
        (Constant::Finite(p), Constant::Finite(l)) if l <= (1.0 + TREND_TOL) * p => Trend::Stable,
        _ => Trend::Growing,
    };
    let constant = match trend {
        Trend::Stable => last.constant,
        Trend::Growing => Constant::Infinite,
    };
    Scan { constant, trend, argmax: last.argmax, levels }
}

fn report(w: &Weight, depth: u32, mode: ScanMode, weak: &Scan, classical: &Scan, primary: Scan) -> A2Report {
    A2Report {
        weight: w.label.clone(),
        mode,
        weak_a2_constant: weak.constant,
        a2_constant: classical.constant,
        eps: None,
        eps_constant: None,
        scan_depth: depth,
        argmax_interval: primary.argmax,
        refinement_trend: primary.trend,
        levels: primary.levels,
    }
}

/// Supremum over scanned intervals of `(⨍_I w)(⨍_I χ_{w>0}/w)`.
pub fn weak_a2_constant(w: &Weight, depth: u32) -> Result<A2Report> {
    check_depth(w, depth)?;
    let weak = scan(w, depth, false);
    let classical = scan(w, depth, true);
    let primary = scan(w, depth, false);
    Ok(report(w, depth, ScanMode::Weak, &weak, &classical, primary))
}

/// Classical A₂: `1/w` unrestricted, so a zero cell makes it infinite.
pub fn a2_constant(w: &Weight, depth: u32) -> Result<A2Report> {
    check_depth(w, depth)?;
    let weak = scan(w, depth, false);
    let classical = scan(w, depth, true);
    let primary = scan(w, depth, true);
    Ok(report(w, depth, ScanMode::Classical, &weak, &classical, primary))
}

/// Weak A₂ scan of `w^{1+ε}`.
pub fn eps_strengthened_check(w: &Weight, eps: f64, depth: u32) -> Result<A2Report> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter { field: "eps".into(), reason: format!("must be positive, found {eps}") });
    }
    check_depth(w, depth)?;
    let weak = scan(w, depth, false);
    let classical = scan(w, depth, true);
    let primary = match w.powered(1.0 + eps) {
        Some(p) => scan(&p, depth, false),
        None => Scan {
            constant: Constant::Infinite,
            trend: Trend::Growing,
            argmax: (0.0, 1.0),
            levels: (0..=depth)
                .map(|level| LevelScan { level, constant: Constant::Infinite, argmax: (0.0, 1.0) })
                .collect(),
        },
    };
    let mut r = report(w, depth, ScanMode::Strengthened, &weak, &classical, primary);
    r.eps = Some(eps);
    r.eps_constant = Some(if r.refinement_trend == Trend::Stable {
        r.levels.last().expect("levels").constant
    } else {
        Constant::Infinite
    });
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsPanel {
    pub entries: Vec<(f64, Constant)>,
    /// Some ε on the grid gives a finite strengthened constant.
    pub strengthened_holds: bool,
}

pub fn eps_panel(w: &Weight, depth: u32) -> Result<EpsPanel> {
    let mut entries = Vec::with_capacity(EPS_GRID.len());
    for eps in EPS_GRID {
        let r = eps_strengthened_check(w, eps, depth)?;
        entries.push((eps, r.eps_constant.expect("set by the check")));
    }
    let strengthened_holds = entries.iter().any(|(_, c)| c.is_finite());
    Ok(EpsPanel { entries, strengthened_holds })
}

// ---------------------------------------------------------------------------
// Partial-sum operators R_M

fn guard(w: &Weight, m: usize) -> Result<()> {
    if w.cells() < 4 * m {
        return Err(Error::Resolution { cells: w.cells(), max_frequency: m });
    }
    Ok(())
}

/// `Σ_k v_k e^{2πijk/K}/K` for `|j| ≤ range`.
fn grid_transform(values: &[f64], range: usize) -> Vec<C64> {
    let k = values.len() as i64;
    let roots: Vec<C64> = (0..k).map(|r| grid_phase(1, r, k)).collect();
    (-(range as i64)..=range as i64)
        .map(|j| {
            let step = j.rem_euclid(k);
            let mut acc = C64::new(0.0, 0.0);
            let mut idx = 0i64;
            for v in values {
                if *v != 0.0 {
                    acc += roots[idx as usize] * *v;
                }
                idx = (idx + step) % k;
            }
            acc / k as f64
        })
        .collect()
}

fn toeplitz(m: usize, symbol: impl Fn(i64) -> C64) -> CMatrix {
    let r = 2 * m + 1;
    CMatrix::from_fn(r, r, |a, b| symbol(b as i64 - a as i64))
}

fn eigenvalues(h: CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

fn psd_sqrt(h: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// `‖R_M‖` on `L²(w dx)` with `R_M f = Σ_{|n|≤M} ⟨f, χ_{w>0} e_n⟩ ẽ_n`, `ẽ_n`
/// the cell-averaged exponential. With `A = W^{1/2}C`, `B = χW^{-1/2}C` the
/// operator is `AB^H/K`, so `‖R_M‖² = λ_max(G₁G₂)` for the `(2M+1)`-square
/// Gram matrices `G₁ = C^H W C/K`, `G₂ = C^H χW^{-1} C/K`.
pub fn rm_norm(w: &Weight, m: usize) -> Result<f64> {
    guard(w, m)?;
    let inv: Vec<f64> = w.values.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 0.0 }).collect();
    let t1 = grid_transform(&w.values, 2 * m);
    let t2 = grid_transform(&inv, 2 * m);
    let s: Vec<C64> = (-(m as i64)..=m as i64).map(|n| cell_average_factor(n, w.cells())).collect();
    let off = 2 * m as i64;
    let gram = |t: &[C64]| {
        let r = 2 * m + 1;
        CMatrix::from_fn(r, r, |a, b| s[a].conj() * s[b] * t[(b as i64 - a as i64 + off) as usize])
    };
    let g1 = gram(&t1);
    let g2 = gram(&t2);
    let root = psd_sqrt(&g1);
    let h = &root * g2 * &root;
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let top = eigenvalues(h).last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// Dense matrix of `R_M` on the support cells of `w`.
pub fn partial_sum_operator(w: &Weight, m: usize) -> Result<LinearMap> {
    guard(w, m)?;
    let k = w.cells();
    let support = w.support();
    let kernel: Vec<C64> = (0..k as i64)
        .map(|d| {
            (-(m as i64)..=m as i64)
                .map(|n| grid_phase(n, d, k as i64) * cell_average_factor(n, k).norm_sqr())
                .sum::<C64>()
                / k as f64
        })
        .collect();
    let r = support.len();
    let matrix = CMatrix::from_fn(r, r, |a, b| {
        let d = (support[a] as i64 - support[b] as i64).rem_euclid(k as i64);
        kernel[d as usize]
    });
    LinearMap::on(matrix, &w.space()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTrend {
    Bounded,
    Growing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmSweep {
    pub weight: String,
    pub cells: usize,
    pub points: Vec<(usize, f64)>,
    pub max_min_ratio: f64,
    /// `log(‖R_{M₁}‖/‖R_{M₀}‖)/log(M₁/M₀)` with `M₁` the largest `M` and `M₀`
    /// the largest listed `M ≤ M₁/2`.
    pub last_octave_slope: Option<f64>,
    pub strictly_increasing_last_octave: bool,
    pub trend: SweepTrend,
}

pub fn rm_norm_sweep(w: &Weight, ms: &[usize]) -> Result<RmSweep> {
    if ms.is_empty() {
        return Err(Error::Parameter { field: "ms".into(), reason: "empty list".into() });
    }
    if ms.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Parameter { field: "ms".into(), reason: "must be strictly ascending".into() });
    }
    guard(w, *ms.last().expect("non-empty"))?;
    let points: Vec<(usize, f64)> = ms.iter().map(|&m| rm_norm(w, m).map(|n| (m, n))).collect::<Result<_>>()?;
    let max = points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let min = points.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let (m1, n1) = *points.last().expect("non-empty");
    let start = points.iter().rposition(|p| 2 * p.0 <= m1 && p.0 > 0);
    let last_octave_slope = start.map(|i| {
        let (m0, n0) = points[i];
        (n1 / n0).ln() / (m1 as f64 / m0 as f64).ln()
    });
    let strictly_increasing_last_octave = match start {
        Some(i) => points[i..].windows(2).all(|p| p[1].1 > p[0].1),
        None => false,
    };
    let trend = match last_octave_slope {
        Some(s) if s > RM_PLATEAU_SLOPE => SweepTrend::Growing,
        _ => SweepTrend::Bounded,
    };
    Ok(RmSweep {
        weight: w.label.clone(),
        cells: w.cells(),
        points,
        max_min_ratio: max / min,
        last_octave_slope,
        strictly_increasing_last_octave,
        trend,
    })
}

/// `M = 4, 8, …` up to `max_m`.
pub fn octave_ms(max_m: usize) -> Vec<usize> {
    std::iter::successors(Some(4usize), |m| Some(m * 2)).take_while(|m| *m <= max_m).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MthmReport {
    pub weight: String,
    /// Weak A₂ supremum over dyadic intervals with `|I| ≤ 1/8`.
    pub small_interval_constant: f64,
    pub sup_norm: f64,
    pub factor: f64,
    pub bound: f64,
    pub holds: bool,
    pub sweep_trend: SweepTrend,
    /// The factor is a derived sufficient constant, not a sharp one.
    pub sufficient_only: bool,
}

/// For `|I| ≤ 1/8` and `N = ⌊1/(8|I|)⌋ ≥ 1/(16|I|)` the kernel bound
/// `D_N ≥ N` on `I − I` yields `(⨍_I w)(⨍_I χ/w) ≤ B/(N|I|)² ≤ 256 B`, with
/// `B = sup_M ‖R_M‖²`.
pub fn mthm_constant_relation(w: &Weight, depth: u32, ms: &[usize]) -> Result<MthmReport> {
    check_depth(w, depth)?;
    if depth < 3 {
        return Err(Error::Parameter { field: "depth".into(), reason: "needs dyadic level 3".into() });
    }
    let grid_values = match w.shape {
        Some(s) => s.resolve(1usize << depth).expect("presets are integrable"),
        None => w.values.clone(),
    };
    let grid = Grid::new(grid_values, false).expect("weak grids always exist");
    let (small, _) = grid.dyadic_sup(3, depth);
    let sweep = rm_norm_sweep(w, ms)?;
    let sup_norm = sweep.points.iter().map(|p| p.1).fold(0.0, f64::max);
    let bound = MTHM_FACTOR * sup_norm * sup_norm;
    Ok(MthmReport {
        weight: w.label.clone(),
        small_interval_constant: small,
        sup_norm,
        factor: MTHM_FACTOR,
        bound,
        holds: small <= bound,
        sweep_trend: sweep.trend,
        sufficient_only: true,
    })
}

// ---------------------------------------------------------------------------
// Exponential frame bounds in L²(w dx)

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleBounds {
    /// Essential infimum of `w` on its support at the weight's resolution.
    pub lower: f64,
    /// Essential supremum of `w`.
    pub upper: f64,
    /// Refinement keeps the infimum away from 0 (`χ/w ∈ L^∞`).
    pub lower_stable: bool,
    /// Refinement keeps the supremum finite (`w ∈ L^∞`).
    pub upper_stable: bool,
    pub cells: usize,
}

fn support_extremes(values: &[f64]) -> (f64, f64) {
    let pos = values.iter().copied().filter(|v| *v > 0.0);
    let lo = pos.clone().fold(f64::INFINITY, f64::min);
    let hi = pos.fold(0.0, f64::max);
    (lo, hi)
}

/// `Σ_n |⟨f, e_n⟩_w|² = ∫|f|²w² dx`, so the bounds are the extreme values
/// of `w` on its support. Closed forms are refined twice to detect
/// unboundedness of `w` or `χ/w`.
pub fn exp_frame_bound_oracle(w: &Weight) -> Result<OracleBounds> {
    let (lower, upper) = support_extremes(&w.values);
    let (lower_stable, upper_stable) = match w.shape {
        Some(s) => {
            let fine = s.resolve(4 * w.cells()).expect("integrable");
            let (lf, uf) = support_extremes(&fine);
            (lf * (1.0 + TREND_TOL) >= lower, uf <= (1.0 + TREND_TOL) * upper)
        }
        None => (true, true),
    };
    Ok(OracleBounds { lower, upper, lower_stable, upper_stable, cells: w.cells() })
}

/// Extreme eigenvalues of the Gram matrix `∫ w e_m conj(e_n) dx`, `|m|,|n| ≤ M`:
/// the frame bounds of `{e_n}_{|n|≤M}` within its span. Exact for piecewise
/// constant `w`.
pub fn exp_frame_bound_measured(w: &Weight, m: usize) -> Result<(f64, f64)> {
    guard(w, m)?;
    let t = grid_transform(&w.values, 2 * m);
    let k = w.cells();
    let off = 2 * m as i64;
    let g = toeplitz(m, |j| t[(j + off) as usize] * cell_average_factor(j, k));
    let ev = eigenvalues(g);
    Ok((ev[0], ev[ev.len() - 1]))
}
