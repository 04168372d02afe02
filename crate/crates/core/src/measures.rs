//! Finite Borel measures on `[0,1)` in computable form, and their `L²(μ)`
//! realizations.
//!
//! Atomic measures realize `L²(μ)` exactly as `C^N` with the atom masses as a
//! diagonal metric. Grid weights are piecewise-constant densities on a uniform
//! `K`-cell partition; their realization is the span of the cell indicators on
//! the support, and exponentials are replaced by their cell averages so that
//! pairings against piecewise-constant functions are exact.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CVector, Space, C64, ONE};

/// Largest supported Cantor level (4096 atoms).
pub const MAX_CANTOR_LEVEL: u32 = 12;

/// Relative tolerance for "total mass equals one".
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureKind {
    /// `Σ p_j δ_{x_j}`, positions ascending.
    Atomic { atoms: Vec<(f64, f64)> },
    /// Density `weight[k]` on `[k/K, (k+1)/K)`.
    GridWeight { weight: Vec<f64> },
    /// Sum of the components; realized as a block-diagonal direct sum.
    Mixture { components: Vec<Measure> },
}

/// A validated measure. Construct through [`Measure::atomic`],
/// [`Measure::grid_weight`], [`Measure::mixture`] or deserialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureKind", into = "MeasureKind")]
pub struct Measure {
    kind: MeasureKind,
}

impl TryFrom<MeasureKind> for Measure {
    type Error = Error;

    fn try_from(kind: MeasureKind) -> Result<Self> {
        match kind {
            MeasureKind::Atomic { atoms } => Measure::atomic(atoms),
            MeasureKind::GridWeight { weight } => Measure::grid_weight(weight),
            MeasureKind::Mixture { components } => Measure::mixture(components),
        }
    }
}

impl From<Measure> for MeasureKind {
    fn from(m: Measure) -> Self {
        m.kind
    }
}

impl Measure {
    pub fn atomic(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("atomic measure needs at least one atom".into()));
        }
        for &(x, p) in &atoms {
            if !(x.is_finite() && (0.0..1.0).contains(&x)) {
                return Err(Error::InvalidMeasure(format!("atom position {x} outside [0,1)")));
            }
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidMeasure(format!("atom mass {p} is not positive")));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = atoms.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidMeasure(format!("duplicate atom position {}", w[0].0)));
        }
        Ok(Self {
            kind: MeasureKind::Atomic { atoms },
        })
    }

    /// Equal-mass atoms at the given positions.
    pub fn uniform_atoms(positions: &[f64]) -> Result<Self> {
        let p = 1.0 / positions.len().max(1) as f64;
        Self::atomic(positions.iter().map(|&x| (x, p)).collect())
    }

    pub fn grid_weight(weight: Vec<f64>) -> Result<Self> {
        if weight.is_empty() {
            return Err(Error::InvalidMeasure("grid weight needs at least one cell".into()));
        }
        if let Some(w) = weight.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("grid weight value {w} is not a non-negative real")));
        }
        if !weight.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidMeasure("grid weight vanishes identically".into()));
        }
        Ok(Self {
            kind: MeasureKind::GridWeight { weight },
        })
    }

    pub fn mixture(components: Vec<Measure>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidMeasure("mixture needs at least one component".into()));
        }
        Ok(Self {
            kind: MeasureKind::Mixture { components },
        })
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// Atoms `(x_j, p_j)` when the measure is atomic.
    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        match &self.kind {
            MeasureKind::Atomic { atoms } => Some(atoms),
            _ => None,
        }
    }

    pub fn require_atoms(&self) -> Result<&[(f64, f64)]> {
        self.atoms().ok_or(Error::NotAtomic)
    }

    pub fn total_mass(&self) -> f64 {
        match &self.kind {
            MeasureKind::Atomic { atoms } => atoms.iter().map(|a| a.1).sum(),
            MeasureKind::GridWeight { weight } => weight.iter().sum::<f64>() / weight.len() as f64,
            MeasureKind::Mixture { components } => components.iter().map(|c| c.total_mass()).sum(),
        }
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= PROBABILITY_TOL
    }

    pub fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::NotProbability {
                mass: self.total_mass(),
            })
        }
    }

    /// Every measure here is singular w.r.t. Lebesgue unless it has a grid part.
    pub fn is_singular(&self) -> bool {
        match &self.kind {
            MeasureKind::Atomic { .. } => true,
            MeasureKind::GridWeight { .. } => false,
            MeasureKind::Mixture { components } => components.iter().all(|c| c.is_singular()),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MeasureKind::Atomic { atoms } => atoms.len(),
            MeasureKind::GridWeight { weight } => weight.iter().filter(|&&w| w > 0.0).count(),
            MeasureKind::Mixture { components } => components.iter().map(|c| c.dim()).sum(),
        }
    }

    fn metric_diagonal(&self, out: &mut Vec<f64>) {
        match &self.kind {
            MeasureKind::Atomic { atoms } => out.extend(atoms.iter().map(|a| a.1)),
            MeasureKind::GridWeight { weight } => {
                let k = weight.len() as f64;
                out.extend(weight.iter().filter(|&&w| w > 0.0).map(|w| w / k));
            }
            MeasureKind::Mixture { components } => {
                for c in components {
                    c.metric_diagonal(out);
                }
            }
        }
    }

    fn exp_coords(&self, n: i64, out: &mut Vec<C64>) {
        match &self.kind {
            MeasureKind::Atomic { atoms } => out.extend(atoms.iter().map(|&(x, _)| unit_phase(n, x))),
            MeasureKind::GridWeight { weight } => {
                let k = weight.len() as i64;
                let s = cell_average_factor(n, k as usize);
                out.extend(
                    weight
                        .iter()
                        .enumerate()
                        .filter(|(_, &w)| w > 0.0)
                        .map(|(j, _)| s * grid_phase(n, j as i64, k)),
                );
            }
            MeasureKind::Mixture { components } => {
                for c in components {
                    c.exp_coords(n, out);
                }
            }
        }
    }

    /// Serialize to a JSON document; round-trips exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `e^{2πi n x}` with the phase reduced mod 1 before scaling.
pub fn unit_phase(n: i64, x: f64) -> C64 {
    let t = (n as f64 * x).rem_euclid(1.0);
    // Quarter turns exactly, so dyadic atoms give exact ±1, ±i.
    match t {
        0.25 => C64::new(0.0, 1.0),
        0.5 => C64::new(-1.0, 0.0),
        0.75 => C64::new(0.0, -1.0),
        _ => C64::from_polar(1.0, 2.0 * PI * t),
    }
}

/// `e^{2πi n k / K}` with exact integer phase reduction.
pub fn grid_phase(n: i64, k: i64, cells: i64) -> C64 {
    let r = (n.rem_euclid(cells) * k).rem_euclid(cells);
    C64::from_polar(1.0, 2.0 * PI * r as f64 / cells as f64)
}

/// `s_n = (e^{2πin/K} − 1)/(2πin/K)`: the cell average of `e^{2πinx}` over
/// `[k/K,(k+1)/K)` equals `s_n e^{2πink/K}`.
pub fn cell_average_factor(n: i64, cells: usize) -> C64 {
    if n == 0 {
        return ONE;
    }
    let half = PI * n as f64 / cells as f64;
    let r = (n.rem_euclid(2 * cells as i64)) as f64 / (2 * cells) as f64;
    let sin_half = (PI * 2.0 * r).sin();
    C64::from_polar(sin_half / half, half)
}

/// `L²(μ)` realization. Grid cells with zero weight are dropped (they carry
/// no mass), keeping the metric positive definite.
pub fn space_of(m: &Measure) -> Space {
    let mut d = Vec::with_capacity(m.dim());
    m.metric_diagonal(&mut d);
    Space::diagonal(&d).expect("validated measures have positive metric")
}

/// Realization of `e^{2πinx}` in `space_of(m)`.
pub fn exp_vector(m: &Measure, n: i64) -> CVector {
    let mut v = Vec::with_capacity(m.dim());
    m.exp_coords(n, &mut v);
    CVector::from_vec(v)
}

/// Realization of the constant function `1`.
pub fn ones(m: &Measure) -> CVector {
    CVector::from_element(m.dim(), ONE)
}

/// `μ̂(n) = ∫ e^{−2πinx} dμ = <1, e_n>`.
pub fn fourier_coefficient(m: &Measure, n: i64) -> C64 {
    let e = exp_vector(m, n);
    space_of(m).inner_unchecked(&ones(m), &e)
}

/// Left endpoints of the level-`l` middle-thirds construction, equal masses.
pub fn cantor_iterate(level: u32) -> Result<Measure> {
    if level > MAX_CANTOR_LEVEL {
        return Err(Error::CantorLevel { level });
    }
    let mut xs = vec![0.0f64];
    for _ in 0..level {
        xs = xs
            .iter()
            .map(|x| x / 3.0)
            .chain(xs.iter().map(|x| x / 3.0 + 2.0 / 3.0))
            .collect();
    }
    let p = 0.5f64.powi(level as i32);
    Measure::atomic(xs.into_iter().map(|x| (x, p)).collect())
}

/// The atomic measure `g μ` with masses `g_j p_j`; `g` must be real positive.
pub fn reweighted(m: &Measure, g: &CVector) -> Result<Measure> {
    let atoms = m.require_atoms()?;
    if g.len() != atoms.len() {
        return Err(Error::DimensionMismatch {
            expected: atoms.len(),
            found: g.len(),
        });
    }
    let out = atoms
        .iter()
        .zip(g.iter())
        .map(|(&(x, p), gj)| {
            if gj.im.abs() > 1e-12 * gj.norm().max(1.0) || gj.re <= 0.0 {
                Err(Error::InvalidSeed(format!("density value {gj} is not positive real")))
            } else {
                Ok((x, p * gj.re))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Measure::atomic(out)
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn atomic() -> impl Strategy<Value = Measure> {
        proptest::collection::btree_map(0u32..1_000_000, 0.01..2.0f64, 1..10).prop_map(|m| {
            Measure::atomic(m.into_iter().map(|(k, p)| (k as f64 / 1e6, p)).collect()).unwrap()
        })
    }

    fn grid() -> impl Strategy<Value = Measure> {
        proptest::collection::vec(prop_oneof![Just(0.0), 0.01..5.0f64], 1..32)
            .prop_filter("nonzero", |w| w.iter().any(|&x| x > 0.0))
            .prop_map(|w| Measure::grid_weight(w).unwrap())
    }

    fn any_measure() -> impl Strategy<Value = Measure> {
        prop_oneof![
            atomic(),
            grid(),
            (atomic(), grid()).prop_map(|(a, g)| Measure::mixture(vec![a, g]).unwrap())
        ]
    }

    proptest! {
        #[test]
        fn atomic_exponentials_have_norm_sqrt_mass(m in atomic(), n in -500i64..500) {
            let s = space_of(&m);
            prop_assert!((s.norm(&exp_vector(&m, n)) - m.total_mass().sqrt()).abs() <= 1e-12);
        }

        #[test]
        fn coefficients_are_hermitian(m in any_measure(), n in -300i64..300) {
            let a = fourier_coefficient(&m, -n);
            let b = fourier_coefficient(&m, n).conj();
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + m.total_mass()));
        }

        #[test]
        fn mixture_coefficients_add(a in atomic(), g in grid(), n in -200i64..200) {
            let mix = Measure::mixture(vec![a.clone(), g.clone()]).unwrap();
            let sum = fourier_coefficient(&a, n) + fourier_coefficient(&g, n);
            prop_assert!((fourier_coefficient(&mix, n) - sum).norm() <= 1e-12);
        }

        #[test]
        fn atomic_exponentials_span(m in atomic()) {
            let n = m.dim();
            let cols: Vec<CVector> = (0..n as i64).map(|k| exp_vector(&m, k)).collect();
            let v = nalgebra::DMatrix::from_columns(&cols);
            let sv = v.singular_values();
            prop_assert!(sv.min() > 0.0);
        }

        #[test]
        fn json_roundtrip_is_exact(m in any_measure()) {
            let back = Measure::from_json(&m.to_json()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
