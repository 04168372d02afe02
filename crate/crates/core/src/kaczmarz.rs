//! Kaczmarz machinery: auxiliary sequences (classic and for dual pairs),
//! partial reconstructions, the one-step update, finite-horizon effectiveness
//! testing and the row-action linear solver.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, CVector, LinearMap, Space, C64, ZERO};
use crate::measures::{exp_vector, Measure};

/// Tolerance for unit-norm and pair-normalization preconditions.
pub const UNIT_TOL: f64 = 1e-9;
/// Decade slope (in log10 of the residual) above which a curve counts as a plateau.
pub const PLATEAU_SLOPE: f64 = -0.01;
/// Default seed for pseudo-random test vectors.
pub const DEFAULT_SEED: u64 = 0x5EED_0F_0A_B1_75;

/// An indexed sequence of vectors `v_0, v_1, ...` in a fixed space.
pub trait VectorStream: Send + Sync {
    fn dim(&self) -> usize;
    fn vector(&self, n: usize) -> Result<CVector>;

    fn take(&self, count: usize) -> Result<Vec<CVector>> {
        (0..count).map(|n| self.vector(n)).collect()
    }
}

/// `e_n = e^{2πinx}` for `n = 0, 1, 2, ...`.
#[derive(Clone, Debug)]
pub struct Exponentials {
    measure: Measure,
}

impl Exponentials {
    pub fn new(measure: &Measure) -> Self {
        Self {
            measure: measure.clone(),
        }
    }
}

impl VectorStream for Exponentials {
    fn dim(&self) -> usize {
        self.measure.dim()
    }

    fn vector(&self, n: usize) -> Result<CVector> {
        Ok(exp_vector(&self.measure, n as i64))
    }
}

/// A finite list, optionally repeated cyclically.
#[derive(Clone, Debug)]
pub struct ExplicitStream {
    vectors: Vec<CVector>,
    cyclic: bool,
}

impl ExplicitStream {
    pub fn new(vectors: Vec<CVector>) -> Result<Self> {
        Self::build(vectors, false)
    }

    pub fn cyclic(vectors: Vec<CVector>) -> Result<Self> {
        Self::build(vectors, true)
    }

    fn build(vectors: Vec<CVector>, cyclic: bool) -> Result<Self> {
        let dim = vectors.first().map(|v| v.len()).ok_or(Error::EmptySpace)?;
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        Ok(Self { vectors, cyclic })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl VectorStream for ExplicitStream {
    fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    fn vector(&self, n: usize) -> Result<CVector> {
        if self.cyclic {
            Ok(self.vectors[n % self.vectors.len()].clone())
        } else {
            self.vectors.get(n).cloned().ok_or(Error::BeyondHorizon {
                requested: n,
                realized: self.vectors.len(),
            })
        }
    }
}

/// `v, v, v, ...`
#[derive(Clone, Debug)]
pub struct Repeat(pub CVector);

impl VectorStream for Repeat {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn vector(&self, _n: usize) -> Result<CVector> {
        Ok(self.0.clone())
    }
}

/// `A v_n` for a base stream `v_n`.
#[derive(Clone)]
pub struct Mapped {
    op: LinearMap,
    base: Arc<dyn VectorStream>,
}

impl Mapped {
    pub fn new(op: LinearMap, base: Arc<dyn VectorStream>) -> Result<Self> {
        if op.domain().dim() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.domain().dim(),
                found: base.dim(),
            });
        }
        Ok(Self { op, base })
    }
}

impl VectorStream for Mapped {
    fn dim(&self) -> usize {
        self.op.codomain().dim()
    }

    fn vector(&self, n: usize) -> Result<CVector> {
        self.op.apply(&self.base.vector(n)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxiliaryKind {
    Classic,
    DualPair,
}

/// Realized prefix `g_0, ..., g_{n_max}` of an auxiliary sequence.
#[derive(Clone, Debug)]
pub struct AuxiliarySequence {
    kind: AuxiliaryKind,
    space: Space,
    g: Vec<CVector>,
}

impl AuxiliarySequence {
    pub fn kind(&self) -> AuxiliaryKind {
        self.kind
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn get(&self, n: usize) -> Result<&CVector> {
        self.g.get(n).ok_or(Error::BeyondHorizon {
            requested: n,
            realized: self.g.len(),
        })
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.g
    }

    /// Largest deviation when the defining sum is re-evaluated against the
    /// stored prefix.
    pub fn recursion_defect(&self, phi: &dyn VectorStream, psi: &dyn VectorStream) -> Result<f64> {
        let mut worst = 0.0f64;
        for n in 0..self.g.len() {
            let p = phi.vector(n)?;
            let mut r = p.clone();
            for k in 0..n {
                let c = self.space.inner(&p, &psi.vector(k)?)?;
                r.axpy(-c, &self.g[k], C64::new(1.0, 0.0));
            }
            worst = worst.max(self.space.norm(&(r - &self.g[n])));
        }
        Ok(worst)
    }
}

fn check_dim(s: &Space, v: &CVector) -> Result<()> {
    if v.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: v.len(),
        });
    }
    Ok(())
}

/// `g_n = φ_n − Σ_{k<n} <φ_n, ψ_k> g_k`; `ψ_k` enters through `M ψ_k`.
fn pair_recursion(phi: &[CVector], psi_lowered: &[CVector]) -> Vec<CVector> {
    let mut g: Vec<CVector> = Vec::with_capacity(phi.len());
    for (n, p) in phi.iter().enumerate() {
        let mut gn = p.clone();
        for k in 0..n {
            let c = psi_lowered[k].dotc(p);
            if c != ZERO {
                gn.axpy(-c, &g[k], C64::new(1.0, 0.0));
            }
        }
        g.push(gn);
    }
    g
}

/// Classic auxiliary sequence of a unit-vector stream, `n = 0..=n_max`.
pub fn auxiliary_sequence(e: &dyn VectorStream, n_max: usize, s: &Space) -> Result<AuxiliarySequence> {
    let es = e.take(n_max + 1)?;
    for (n, v) in es.iter().enumerate() {
        check_dim(s, v)?;
        let norm = s.norm(v);
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnit { index: n, norm });
        }
    }
    let lowered: Vec<CVector> = es.iter().map(|v| s.lower(v)).collect();
    Ok(AuxiliarySequence {
        kind: AuxiliaryKind::Classic,
        space: s.clone(),
        g: pair_recursion(&es, &lowered),
    })
}

/// Auxiliary sequence of a pair with `<φ_n, ψ_n> = 1`, `n = 0..=n_max`.
pub fn dual_auxiliary_sequence(
    phi: &dyn VectorStream,
    psi: &dyn VectorStream,
    n_max: usize,
    s: &Space,
) -> Result<AuxiliarySequence> {
    let (ps, qs) = realize_pair(phi, psi, n_max, s)?;
    let lowered: Vec<CVector> = qs.iter().map(|v| s.lower(v)).collect();
    Ok(AuxiliarySequence {
        kind: AuxiliaryKind::DualPair,
        space: s.clone(),
        g: pair_recursion(&ps, &lowered),
    })
}

fn realize_pair(
    phi: &dyn VectorStream,
    psi: &dyn VectorStream,
    n_max: usize,
    s: &Space,
) -> Result<(Vec<CVector>, Vec<CVector>)> {
    let ps = phi.take(n_max + 1)?;
    let qs = psi.take(n_max + 1)?;
    for (n, (p, q)) in ps.iter().zip(&qs).enumerate() {
        check_dim(s, p)?;
        check_dim(s, q)?;
        let value = s.inner(p, q)?;
        if (value - C64::new(1.0, 0.0)).norm() > UNIT_TOL {
            return Err(Error::PairNormalization { index: n, value });
        }
    }
    Ok((ps, qs))
}

/// `x_n = Σ_{k≤n} <x, g_k> t_k`.
pub fn partial_reconstruction(
    x: &CVector,
    g: &AuxiliarySequence,
    targets: &dyn VectorStream,
    n: usize,
) -> Result<CVector> {
    check_dim(&g.space, x)?;
    if n >= g.len() {
        return Err(Error::BeyondHorizon {
            requested: n,
            realized: g.len(),
        });
    }
    let mut out = CVector::zeros(x.len());
    for k in 0..=n {
        let c = g.space.inner_unchecked(x, &g.g[k]);
        out.axpy(c, &targets.vector(k)?, C64::new(1.0, 0.0));
    }
    Ok(out)
}

/// One-step form `x_n = x_{n−1} + <x − x_{n−1}, φ_n> ψ_n`, `x_{−1} = 0`.
/// Agrees with [`partial_reconstruction`] against the pair's auxiliary
/// sequence with targets `ψ`.
pub fn sequential_update(
    x: &CVector,
    phi: &dyn VectorStream,
    psi: &dyn VectorStream,
    n: usize,
    s: &Space,
) -> Result<CVector> {
    check_dim(s, x)?;
    let (ps, qs) = realize_pair(phi, psi, n, s)?;
    let mut xn = CVector::zeros(x.len());
    for (p, q) in ps.iter().zip(&qs) {
        let c = s.inner_unchecked(&(x - &xn), p);
        xn.axpy(c, q, C64::new(1.0, 0.0));
    }
    Ok(xn)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    EffectiveWithinTolerance,
    NotEffective,
    Inconclusive,
}

/// The system under test: a single stream (`φ = ψ = e`) or a pair.
#[derive(Clone, Copy)]
pub enum System<'a> {
    Classic(&'a dyn VectorStream),
    Pair(&'a dyn VectorStream, &'a dyn VectorStream),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessReport {
    pub tested_vectors: usize,
    pub n_max: usize,
    pub tol: f64,
    pub seed: u64,
    /// Largest `‖x − x_{n_max}‖ / ‖x‖` over the trial vectors.
    pub max_residual: f64,
    /// Classic systems: `sup |Σ_{k≤n_max} |<x,g_k>|² − ‖x‖²|`. Pairs: the
    /// reproducing defect `sup |Σ_{k≤n_max} <x,g_k><ψ_k,x> − ‖x‖²|`.
    pub parseval_defect: f64,
    /// `(n, max residual, max secondary defect)` over the trials.
    pub residual_curve: Vec<(usize, f64, f64)>,
    /// Change of `log10` residual between `n_max/10` and `n_max`.
    pub decade_slope: f64,
    pub verdict: Verdict,
}

/// Seeded pseudo-random unit vectors with coordinates uniform in the unit square.
pub fn random_unit_vectors(s: &Space, count: usize, seed: u64) -> Vec<CVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v = CVector::from_fn(s.dim(), |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let norm = s.norm(&v);
            if norm > 1e-3 {
                break v / C64::from(norm);
            }
        })
        .collect()
}

/// Finite-horizon effectiveness test on seeded random unit vectors.
pub fn effectiveness_test(
    system: System<'_>,
    s: &Space,
    trials: usize,
    n_max: usize,
    tol: f64,
    seed: u64,
) -> Result<EffectivenessReport> {
    if trials == 0 {
        return Err(Error::Parameter {
            field: "trials".into(),
            reason: "must be at least 1".into(),
        });
    }
    let (ps, qs) = match system {
        System::Classic(e) => {
            let es = e.take(n_max + 1)?;
            for (n, v) in es.iter().enumerate() {
                check_dim(s, v)?;
                let norm = s.norm(v);
                if (norm - 1.0).abs() > UNIT_TOL {
                    return Err(Error::NonUnit { index: n, norm });
                }
            }
            (es.clone(), es)
        }
        System::Pair(phi, psi) => realize_pair(phi, psi, n_max, s)?,
    };
    let classic = matches!(system, System::Classic(_));
    let lowered_phi: Vec<CVector> = ps.iter().map(|v| s.lower(v)).collect();

    let mut curve = vec![(0usize, 0.0f64, 0.0f64); n_max + 1];
    for (n, row) in curve.iter_mut().enumerate() {
        row.0 = n;
    }
    for x in random_unit_vectors(s, trials, seed) {
        let xx = s.inner_unchecked(&x, &x).re;
        let mut xn = CVector::zeros(x.len());
        let mut secondary = C64::new(0.0, 0.0);
        for n in 0..=n_max {
            // <x − x_{n−1}, φ_n> = <x, g_n>
            let c = lowered_phi[n].dotc(&(&x - &xn));
            xn.axpy(c, &qs[n], C64::new(1.0, 0.0));
            secondary += if classic {
                C64::from(c.norm_sqr())
            } else {
                c * s.inner_unchecked(&qs[n], &x)
            };
            let residual = s.norm(&(&x - &xn));
            let defect = (secondary - xx).norm();
            curve[n].1 = curve[n].1.max(residual);
            curve[n].2 = curve[n].2.max(defect);
        }
    }
    let max_residual = curve[n_max].1;
    let parseval_defect = curve[n_max].2;
    let start = curve[n_max / 10].1;
    let floor = f64::MIN_POSITIVE;
    let decade_slope = max_residual.max(floor).log10() - start.max(floor).log10();
    let verdict = if max_residual <= tol && parseval_defect <= tol {
        Verdict::EffectiveWithinTolerance
    } else if decade_slope > PLATEAU_SLOPE {
        Verdict::NotEffective
    } else {
        Verdict::Inconclusive
    };
    Ok(EffectivenessReport {
        tested_vectors: trials,
        n_max,
        tol,
        seed,
        max_residual,
        parseval_defect,
        residual_curve: curve,
        decade_slope,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    /// Iterate with the smallest residual seen at a sweep boundary.
    pub x: CVector,
    /// Completed sweeps.
    pub sweeps: usize,
    /// `‖A x − b‖` of the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

/// Cyclic Kaczmarz projections `x ← x + (b_i − A_i x)/‖A_i‖² · A_i^H` from
/// `x = 0`, stopping when `‖Ax − b‖ ≤ tol` at the end of a sweep.
pub fn row_action_solve(a: &CMatrix, b: &CVector, sweeps: usize, tol: f64) -> Result<SolveResult> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let rows: Vec<Vec<C64>> = (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect();
    let mut norms = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let n2: f64 = r.iter().map(|z| z.norm_sqr()).sum();
        if n2 == 0.0 {
            return Err(Error::ZeroRow { row: i });
        }
        norms.push(n2);
    }
    let mut x = vec![ZERO; a.ncols()];
    let residual_of = |x: &[C64]| -> f64 {
        rows.iter()
            .zip(b.iter())
            .map(|(r, bi)| {
                let ax: C64 = r.iter().zip(x).map(|(p, q)| p * q).sum();
                (bi - ax).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut best = (residual_of(&x), x.clone(), 0usize);
    if best.0 <= tol {
        return Ok(SolveResult {
            x: CVector::from_vec(x),
            sweeps: 0,
            residual: best.0,
            converged: true,
        });
    }
    for sweep in 1..=sweeps {
        for (i, r) in rows.iter().enumerate() {
            let ax: C64 = r.iter().zip(&x).map(|(p, q)| p * q).sum();
            let c = (b[i] - ax) / norms[i];
            for (xj, rj) in x.iter_mut().zip(r) {
                *xj += c * rj.conj();
            }
        }
        let res = residual_of(&x);
        if res < best.0 {
            best = (res, x.clone(), sweep);
        }
        if res <= tol {
            return Ok(SolveResult {
                x: CVector::from_vec(x),
                sweeps: sweep,
                residual: res,
                converged: true,
            });
        }
    }
    Ok(SolveResult {
        x: CVector::from_vec(best.1),
        sweeps,
        residual: best.0,
        converged: false,
    })
}
