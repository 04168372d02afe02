//! Classification panels for exponentials over a weight or an atomic measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{frame_bounds, FrameSequence};
use crate::kaczmarz::{effectiveness_test, Exponentials, System, Verdict, DEFAULT_SEED};
use crate::measures::{exp_vector, space_of, Measure, MeasureKind};
use crate::weights::{
    eps_panel, exp_frame_bound_measured, exp_frame_bound_oracle, octave_ms, weak_a2_constant, Constant, EpsPanel,
    OracleBounds, Trend, Weight, TREND_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameClass {
    Frame,
    BesselOnly,
    LowerSemiFrameOnly,
    Neither,
}

impl FrameClass {
    pub fn from_flags(bessel: bool, lower: bool) -> FrameClass {
        match (bessel, lower) {
            (true, true) => FrameClass::Frame,
            (true, false) => FrameClass::BesselOnly,
            (false, true) => FrameClass::LowerSemiFrameOnly,
            (false, false) => FrameClass::Neither,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameClass::Frame => "frame",
            FrameClass::BesselOnly => "bessel_only",
            FrameClass::LowerSemiFrameOnly => "lower_semi_frame_only",
            FrameClass::Neither => "neither",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDiagnosis {
    pub weight: String,
    pub cells: usize,
    pub depth: u32,
    pub max_m: usize,
    /// `(M, A(M), B(M))` for `{e_n}_{|n|≤M}` in `L²(w dx)`.
    pub measured: Vec<(usize, f64, f64)>,
    pub oracle: OracleBounds,
    pub weak_a2_constant: Constant,
    pub weak_a2_trend: Trend,
    pub eps_panel: EpsPanel,
    pub bessel: bool,
    pub lower_semi_frame: bool,
    pub classification: FrameClass,
    /// Some `w^{1+ε}` passes the weak scan, which gives two-sided
    /// dextrodual convergence.
    pub dextrodual_expected: bool,
    /// Weak scan is finite and stable but every `w^{1+ε}` scan diverges.
    /// Dextroduality is then open; such weights are reported, not classified.
    pub open_candidate: bool,
}

/// Exponentials in `L²(w dx)`: Bessel iff `w ∈ L^∞`, lower semi-frame iff
/// `χ_{w>0}/w ∈ L^∞`. Closed forms are resolved at `max(cells, 4·max_m)` cells.
pub fn diagnose_weight(w: &Weight, depth: u32, max_m: usize) -> Result<WeightDiagnosis> {
    let w = if w.shape().is_some() && w.cells() < 4 * max_m { w.resolved(4 * max_m)? } else { w.clone() };
    let ms: Vec<usize> = octave_ms(max_m).into_iter().filter(|m| 4 * m <= w.cells()).collect();
    if ms.is_empty() {
        return Err(Error::Parameter {
            field: "max_m".into(),
            reason: format!("need 4 <= max_m <= cells/4 = {}", w.cells() / 4),
        });
    }
    let measured: Vec<(usize, f64, f64)> = ms
        .iter()
        .map(|&m| exp_frame_bound_measured(&w, m).map(|(a, b)| (m, a, b)))
        .collect::<Result<_>>()?;
    let oracle = exp_frame_bound_oracle(&w)?;
    let a2 = weak_a2_constant(&w, depth)?;
    let panel = eps_panel(&w, depth)?;
    let b_last = measured.last().expect("non-empty").2;
    let bessel = oracle.upper_stable && b_last <= oracle.upper * (1.0 + TREND_TOL);
    let lower_semi_frame = oracle.lower_stable;
    Ok(WeightDiagnosis {
        weight: w.label().to_string(),
        cells: w.cells(),
        depth,
        max_m,
        measured,
        oracle,
        weak_a2_constant: a2.weak_a2_constant,
        weak_a2_trend: a2.refinement_trend,
        dextrodual_expected: panel.strengthened_holds,
        open_candidate: a2.weak_a2_constant.is_finite()
            && a2.refinement_trend == Trend::Stable
            && !panel.strengthened_holds,
        eps_panel: panel,
        bessel,
        lower_semi_frame,
        classification: FrameClass::from_flags(bessel, lower_semi_frame),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureDiagnosis {
    pub dim: usize,
    pub max_m: usize,
    /// `(M, A(M), B(M))` for `{e_n}_{|n|≤M}` in `L²(ν)`.
    pub measured: Vec<(usize, f64, f64)>,
    /// Growth exponent of `B(M)` over the last doubling.
    pub upper_growth: f64,
    pub bessel: bool,
    pub lower_semi_frame: bool,
    pub classification: FrameClass,
    pub effectiveness: Verdict,
    pub effectiveness_residual: f64,
}

/// Two-sided exponentials over an atomic measure. Grid weights are routed to
/// [`diagnose_weight`].
pub fn diagnose_measure(nu: &Measure, max_m: usize) -> Result<MeasureDiagnosis> {
    if let MeasureKind::GridWeight { .. } = nu.kind() {
        return Err(Error::Parameter {
            field: "measure".into(),
            reason: "grid weights are diagnosed as weights".into(),
        });
    }
    if max_m < 4 {
        return Err(Error::Parameter { field: "max_m".into(), reason: "must be at least 4".into() });
    }
    let s = space_of(nu);
    let mut measured = Vec::new();
    for m in octave_ms(max_m) {
        let vectors: Vec<_> = (-(m as i64)..=m as i64).map(|n| exp_vector(nu, n)).collect();
        let fs = FrameSequence::explicit(vectors, &s)?;
        let r = frame_bounds(&fs, 2 * m)?;
        measured.push((m, r.lower_bound, r.upper_bound));
    }
    let k = measured.len();
    let upper_growth = if k >= 2 {
        (measured[k - 1].2 / measured[k - 2].2).log2()
    } else {
        0.0
    };
    let bessel = upper_growth <= TREND_TOL;
    let lower_semi_frame = measured[k - 1].1 > 0.0;
    let eff = effectiveness_test(System::Classic(&Exponentials::new(nu)), &s, 8, max_m, 1e-9, DEFAULT_SEED)?;
    Ok(MeasureDiagnosis {
        dim: nu.dim(),
        max_m,
        measured,
        upper_growth,
        bessel,
        lower_semi_frame,
        classification: FrameClass::from_flags(bessel, lower_semi_frame),
        effectiveness: eff.verdict,
        effectiveness_residual: eff.max_residual,
    })
}
