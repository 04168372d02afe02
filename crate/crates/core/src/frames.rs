//! Truncated frame analysis: frame operators, bounds, classification flags,
//! canonical duals, Gram matrices and excess of finite families.
//!
//! A horizon `h` means the vectors `g_0, ..., g_h` (inclusive). Two-sided
//! orbits use `|n| ≤ h`. Finite lists are clamped to their length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    hermitian_eigen, self_adjoint_eigenvalues, CMatrix, CVector, LinearMap, Space, C64,
};
use crate::kaczmarz::AuxiliarySequence;

/// Eigenvalues at or below this count as zero (not-a-frame floor).
pub const EIGEN_FLOOR: f64 = 1e-10;
/// Parseval/tight flag tolerance.
pub const PARSEVAL_TOL: f64 = 1e-6;
/// Relative bound movement across the last doubling accepted as stable.
pub const STABLE_TAIL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSet {
    Natural,
    Integers,
}

#[derive(Clone, Debug)]
pub enum Generator {
    /// A finite family.
    Explicit(Vec<CVector>),
    /// `{T^n g_0}` over `n ∈ ℕ` or `n ∈ ℤ`.
    Orbit {
        op: LinearMap,
        seed: CVector,
        index: IndexSet,
    },
    /// A realized prefix of an infinite sequence (e.g. an auxiliary sequence).
    Realized(Vec<CVector>),
}

#[derive(Clone, Debug)]
pub struct FrameSequence {
    generator: Generator,
    space: Space,
}

impl FrameSequence {
    pub fn explicit(vectors: Vec<CVector>, space: &Space) -> Result<Self> {
        Self::check_all(&vectors, space)?;
        if vectors.is_empty() {
            return Err(Error::Parameter {
                field: "vectors".into(),
                reason: "explicit family is empty".into(),
            });
        }
        Ok(Self {
            generator: Generator::Explicit(vectors),
            space: space.clone(),
        })
    }

    pub fn orbit(op: &LinearMap, seed: &CVector, index: IndexSet) -> Result<Self> {
        let space = op.domain().clone();
        if op.codomain().dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: op.codomain().dim(),
            });
        }
        Self::check_all(std::slice::from_ref(seed), &space)?;
        if index == IndexSet::Integers {
            op.inverse()?;
        }
        Ok(Self {
            generator: Generator::Orbit {
                op: op.clone(),
                seed: seed.clone(),
                index,
            },
            space,
        })
    }

    pub fn realized(vectors: Vec<CVector>, space: &Space) -> Result<Self> {
        Self::check_all(&vectors, space)?;
        if vectors.is_empty() {
            return Err(Error::Parameter {
                field: "vectors".into(),
                reason: "realized prefix is empty".into(),
            });
        }
        Ok(Self {
            generator: Generator::Realized(vectors),
            space: space.clone(),
        })
    }

    pub fn from_auxiliary(g: &AuxiliarySequence) -> Result<Self> {
        Self::realized(g.vectors().to_vec(), g.space())
    }

    fn check_all(vectors: &[CVector], space: &Space) -> Result<()> {
        if let Some(v) = vectors.iter().find(|v| v.len() != space.dim()) {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn is_finite_list(&self) -> bool {
        matches!(self.generator, Generator::Explicit(_))
    }

    /// Largest horizon that can be realized (`None` for orbits).
    pub fn max_horizon(&self) -> Option<usize> {
        match &self.generator {
            Generator::Explicit(v) | Generator::Realized(v) => Some(v.len() - 1),
            Generator::Orbit { .. } => None,
        }
    }

    fn clamp(&self, horizon: usize) -> usize {
        self.max_horizon().map_or(horizon, |m| horizon.min(m))
    }

    /// Realized vectors up to `horizon`. Two-sided orbits are ordered
    /// `g_0, g_1, g_{−1}, g_2, g_{−2}, ...`.
    pub fn vectors(&self, horizon: usize) -> Result<Vec<CVector>> {
        let h = self.clamp(horizon);
        match &self.generator {
            Generator::Explicit(v) | Generator::Realized(v) => Ok(v[..=h].to_vec()),
            Generator::Orbit { op, seed, index } => {
                let forward = orbit_vectors(op.matrix(), seed, h + 1);
                match index {
                    IndexSet::Natural => Ok(forward),
                    IndexSet::Integers => {
                        let inv = op.inverse()?.into_matrix();
                        let backward = orbit_vectors(&inv, seed, h + 1);
                        let mut out = vec![forward[0].clone()];
                        for n in 1..=h {
                            out.push(forward[n].clone());
                            out.push(backward[n].clone());
                        }
                        Ok(out)
                    }
                }
            }
        }
    }
}

/// `g, A g, A² g, ...` (`count` vectors).
pub fn orbit_vectors(a: &CMatrix, g0: &CVector, count: usize) -> Vec<CVector> {
    let mut out = Vec::with_capacity(count);
    let mut v = g0.clone();
    for _ in 0..count {
        let next = a * &v;
        out.push(v);
        v = next;
    }
    out
}

/// `S = Σ_n g_n ⊗ g_n`, i.e. `S f = Σ <f, g_n> g_n`, as a matrix.
pub fn frame_operator_of(vectors: &[CVector], space: &Space) -> LinearMap {
    let n = space.dim();
    let mut s = CMatrix::zeros(n, n);
    for g in vectors {
        let lowered = space.lower(g);
        s.ger(C64::new(1.0, 0.0), g, &lowered.conjugate(), C64::new(1.0, 0.0));
    }
    LinearMap::on(s, space).expect("square by construction")
}

/// Truncated frame operator `S_h`.
pub fn frame_operator(fs: &FrameSequence, horizon: usize) -> Result<LinearMap> {
    Ok(frame_operator_of(&fs.vectors(horizon)?, &fs.space))
}

/// Extreme eigenvalues of `Σ ỹ ỹ^H` with `ỹ = E g` (metric-whitened).
fn whitened_bounds(vectors: &[CVector], space: &Space) -> (f64, f64) {
    let n = space.dim();
    let mut acc = CMatrix::zeros(n, n);
    for g in vectors {
        let y = space.whiten(g);
        acc.ger(C64::new(1.0, 0.0), &y, &y.conjugate(), C64::new(1.0, 0.0));
    }
    let acc = (&acc + acc.adjoint()).scale(0.5);
    let (vals, _) = hermitian_eigen(&acc);
    (vals[0].max(0.0), vals[n - 1].max(0.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub frame: bool,
    pub bessel: bool,
    pub lower_semi_frame: bool,
    pub parseval: bool,
    pub tight: bool,
    pub riesz_basis_finite: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub horizon: usize,
    pub vectors_used: usize,
    /// Relative movement of the bounds between `horizon/2` and `horizon`.
    pub tail_indicator: f64,
    pub classification: Classification,
    pub excess: Option<usize>,
}

fn relative_change(new: f64, old: f64) -> f64 {
    let d = (new - old).abs();
    if d == 0.0 {
        0.0
    } else {
        d / new.abs().max(old.abs())
    }
}

fn report_from(fs: &FrameSequence, horizon: usize, vectors: &[CVector], half: Option<(f64, f64)>) -> FrameReport {
    let (a, b) = whitened_bounds(vectors, &fs.space);
    let tail = match half {
        Some((ah, bh)) if !fs.is_finite_list() => relative_change(a, ah).max(relative_change(b, bh)),
        _ => 0.0,
    };
    let dim = fs.space.dim();
    let lower = a > EIGEN_FLOOR;
    let bessel = tail <= STABLE_TAIL;
    let frame = lower && bessel;
    let parseval = frame && (a - 1.0).abs() <= PARSEVAL_TOL && (b - 1.0).abs() <= PARSEVAL_TOL;
    let tight = frame && (b - a).abs() <= PARSEVAL_TOL * b;
    let finite = fs.is_finite_list();
    FrameReport {
        lower_bound: a,
        upper_bound: b,
        horizon,
        vectors_used: vectors.len(),
        tail_indicator: tail,
        classification: Classification {
            frame,
            bessel,
            lower_semi_frame: lower,
            parseval,
            tight,
            riesz_basis_finite: finite && vectors.len() == dim && lower,
        },
        excess: (finite && lower).then(|| vectors.len() - dim),
    }
}

/// Frame bounds and classification at `horizon`; the realized prefix must
/// contain at least `dim` vectors.
pub fn frame_bounds(fs: &FrameSequence, horizon: usize) -> Result<FrameReport> {
    let dim = fs.space.dim();
    let h = fs.clamp(horizon);
    if prefix_len(fs, h) < dim {
        return Err(Error::HorizonTooShort { horizon, dim });
    }
    let vectors = fs.vectors(h)?;
    let half = if fs.is_finite_list() {
        None
    } else {
        let count_half = prefix_len(fs, h / 2);
        Some(whitened_bounds(&vectors[..count_half], &fs.space))
    };
    Ok(report_from(fs, h, &vectors, half))
}

/// Number of realized vectors at a horizon.
fn prefix_len(fs: &FrameSequence, horizon: usize) -> usize {
    let h = fs.clamp(horizon);
    match &fs.generator {
        Generator::Orbit {
            index: IndexSet::Integers,
            ..
        } => 2 * h + 1,
        _ => h + 1,
    }
}

/// Bounds at each horizon in `horizons` (ascending), as CSV-ready rows.
pub fn bounds_sweep(fs: &FrameSequence, horizons: &[usize]) -> Result<Vec<FrameReport>> {
    horizons.iter().map(|&h| frame_bounds(fs, h)).collect()
}

/// Doubles the horizon from `start` until the bounds move less than
/// `STABLE_TAIL` across a doubling or `cap` is reached.
pub fn stabilized_bounds(fs: &FrameSequence, start: usize, cap: usize) -> Result<(FrameReport, bool)> {
    let dim = fs.space.dim();
    let mut h = start.max(dim).max(1);
    loop {
        let r = frame_bounds(fs, h)?;
        let exhausted = fs.max_horizon().is_some_and(|m| h >= m);
        if r.tail_indicator <= STABLE_TAIL || exhausted {
            return Ok((r, true));
        }
        if h * 2 > cap {
            return Ok((r, false));
        }
        h *= 2;
    }
}

/// `{S_h^{-1} g_n}` at the same horizon.
pub fn canonical_dual(fs: &FrameSequence, horizon: usize) -> Result<FrameSequence> {
    let vectors = fs.vectors(horizon)?;
    let s = frame_operator_of(&vectors, &fs.space);
    let eig = self_adjoint_eigenvalues(&s)?;
    if eig[0] <= EIGEN_FLOOR {
        return Err(Error::NotAFrame {
            min_eigenvalue: eig[0],
        });
    }
    let inv = s.inverse()?;
    let dual = vectors.iter().map(|g| inv.matrix() * g).collect();
    match fs.generator {
        Generator::Explicit(_) => FrameSequence::explicit(dual, &fs.space),
        _ => FrameSequence::realized(dual, &fs.space),
    }
}

fn numerical_rank(vectors: &[CVector], space: &Space) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let cols: Vec<CVector> = vectors.iter().map(|g| space.whiten(g)).collect();
    let m = CMatrix::from_columns(&cols);
    let sv = m.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > EIGEN_FLOOR.sqrt() * top).count()
}

/// `#vectors − dim` for a finite spanning family.
pub fn excess_finite(vectors: &[CVector], space: &Space) -> Result<usize> {
    FrameSequence::check_all(vectors, space)?;
    let rank = numerical_rank(vectors, space);
    if rank < space.dim() {
        return Err(Error::NotSpanning {
            rank,
            dim: space.dim(),
        });
    }
    Ok(vectors.len() - space.dim())
}

/// `G[n,k] = <g_n, g_k>`.
pub fn gram_matrix(fs: &FrameSequence, horizon: usize) -> Result<CMatrix> {
    let vectors = fs.vectors(horizon)?;
    Ok(gram_of(&vectors, &fs.space))
}

pub fn gram_of(vectors: &[CVector], space: &Space) -> CMatrix {
    let n = vectors.len();
    let lowered: Vec<CVector> = vectors.iter().map(|v| space.lower(v)).collect();
    CMatrix::from_fn(n, n, |i, j| lowered[j].dotc(&vectors[i]))
}

/// `Σ |<f, g_n>|²`.
pub fn frame_sum(f: &CVector, vectors: &[CVector], space: &Space) -> f64 {
    let lf = space.lower(f);
    vectors.iter().map(|g| lf.dotc(g).norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{complexify, max_abs_diff, ONE, ZERO};
    use crate::kaczmarz::{auxiliary_sequence, random_unit_vectors, Exponentials};
    use crate::measures::{space_of, Measure};

    fn basis(n: usize) -> Vec<CVector> {
        (0..n)
            .map(|i| {
                let mut v = CVector::zeros(n);
                v[i] = ONE;
                v
            })
            .collect()
    }

    fn two_atom_aux() -> FrameSequence {
        let m = Measure::atomic(vec![(0.0, 0.5), (0.5, 0.5)]).unwrap();
        let g = auxiliary_sequence(&Exponentials::new(&m), 8, &space_of(&m)).unwrap();
        FrameSequence::from_auxiliary(&g).unwrap()
    }

    #[test]
    fn orthonormal_basis_is_parseval_riesz() {
        let s = Space::euclidean(2).unwrap();
        let fs = FrameSequence::explicit(basis(2), &s).unwrap();
        let op = frame_operator(&fs, 2).unwrap();
        assert!(max_abs_diff(op.matrix(), &CMatrix::identity(2, 2)) < 1e-15);
        let r = frame_bounds(&fs, 2).unwrap();
        assert!(r.classification.parseval && r.classification.tight && r.classification.riesz_basis_finite);
        assert_eq!(r.excess, Some(0));
        assert_eq!(r.tail_indicator, 0.0);
        assert_eq!(gram_matrix(&fs, 1).unwrap(), CMatrix::identity(2, 2));
    }

    #[test]
    fn two_atom_auxiliary_is_parseval() {
        let fs = two_atom_aux();
        let op = frame_operator(&fs, 4).unwrap();
        assert!(max_abs_diff(op.matrix(), &CMatrix::identity(2, 2)) < 1e-14);
        let r = frame_bounds(&fs, 4).unwrap();
        assert!((r.lower_bound - 1.0).abs() < 1e-14 && (r.upper_bound - 1.0).abs() < 1e-14);
        assert!(r.classification.parseval && !r.classification.riesz_basis_finite);
        assert_eq!(r.excess, None);
    }

    #[test]
    fn two_atom_gram_pattern() {
        let g = gram_matrix(&two_atom_aux(), 3).unwrap();
        let expected = CMatrix::from_diagonal(&complexify(&[1.0, 1.0, 0.0, 0.0]));
        assert!(max_abs_diff(&g, &expected) < 1e-14);
    }

    #[test]
    fn repeated_vector_is_not_frame() {
        let s = Space::euclidean(2).unwrap();
        let fs = FrameSequence::explicit(vec![complexify(&[1.0, 0.0]); 11], &s).unwrap();
        let r = frame_bounds(&fs, 10).unwrap();
        assert!(r.lower_bound < EIGEN_FLOOR);
        assert!(!r.classification.frame && !r.classification.lower_semi_frame && r.classification.bessel);
        assert!(matches!(canonical_dual(&fs, 10), Err(Error::NotAFrame { .. })));
        assert!(matches!(
            excess_finite(&fs.vectors(10).unwrap(), &s),
            Err(Error::NotSpanning { rank: 1, dim: 2 })
        ));
    }

    #[test]
    fn horizon_below_dim_rejected() {
        let s = Space::euclidean(3).unwrap();
        let fs = FrameSequence::explicit(basis(3), &s).unwrap();
        assert_eq!(
            frame_bounds(&fs, 1).unwrap_err(),
            Error::HorizonTooShort { horizon: 1, dim: 3 }
        );
    }

    #[test]
    fn mercedes_style_dual() {
        let s = Space::euclidean(2).unwrap();
        let r = 0.5f64.sqrt();
        let vs = vec![complexify(&[1.0, 0.0]), complexify(&[0.0, 1.0]), complexify(&[r, r])];
        let fs = FrameSequence::explicit(vs.clone(), &s).unwrap();
        let dual = canonical_dual(&fs, 2).unwrap();
        // S = [[3/2, 1/2], [1/2, 3/2]], S^{-1} = [[3/4, -1/4], [-1/4, 3/4]].
        let d = dual.vectors(2).unwrap();
        assert!(max_abs_diff(
            &CMatrix::from_columns(&d),
            &CMatrix::from_columns(&[
                complexify(&[0.75, -0.25]),
                complexify(&[-0.25, 0.75]),
                complexify(&[0.5 * r, 0.5 * r])
            ])
        ) < 1e-14);
        for f in random_unit_vectors(&s, 5, 1) {
            let mut rec = CVector::zeros(2);
            for (g, h) in vs.iter().zip(&d) {
                rec += g * s.inner(&f, h).unwrap();
            }
            assert!(s.norm(&(rec - &f)) < 1e-8);
        }
        assert_eq!(excess_finite(&vs, &s).unwrap(), 1);
        assert_eq!(excess_finite(&d, &s).unwrap(), 1);
    }

    #[test]
    fn parseval_dual_is_itself() {
        let fs = two_atom_aux();
        let dual = canonical_dual(&fs, 3).unwrap();
        for (a, b) in fs.vectors(3).unwrap().iter().zip(dual.vectors(3).unwrap()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn orbit_two_sided_ordering() {
        let s = Space::euclidean(1).unwrap();
        let op = LinearMap::on(CMatrix::from_element(1, 1, C64::new(2.0, 0.0)), &s).unwrap();
        let fs = FrameSequence::orbit(&op, &complexify(&[1.0]), IndexSet::Integers).unwrap();
        let v: Vec<f64> = fs.vectors(2).unwrap().iter().map(|x| x[0].re).collect();
        assert_eq!(v, vec![1.0, 2.0, 0.5, 4.0, 0.25]);
        let singular = LinearMap::on(CMatrix::from_element(1, 1, ZERO), &s).unwrap();
        assert!(FrameSequence::orbit(&singular, &complexify(&[1.0]), IndexSet::Integers).is_err());
    }

    #[test]
    fn growing_orbit_is_not_bessel() {
        let s = Space::euclidean(1).unwrap();
        let op = LinearMap::on(CMatrix::from_element(1, 1, ONE), &s).unwrap();
        let fs = FrameSequence::orbit(&op, &complexify(&[1.0]), IndexSet::Natural).unwrap();
        let (r, stable) = stabilized_bounds(&fs, 16, 1024).unwrap();
        assert!(!stable && !r.classification.bessel && r.classification.lower_semi_frame);
        assert!(r.tail_indicator > 0.4);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::hilbert::max_abs_diff;
    use crate::kaczmarz::random_unit_vectors;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn family() -> impl Strategy<Value = (Space, Vec<CVector>)> {
        (2usize..6)
            .prop_flat_map(|d| {
                (
                    proptest::collection::vec(0.2..3.0f64, d),
                    proptest::collection::vec(
                        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d),
                        d..=12,
                    ),
                )
            })
            .prop_map(|(w, vs)| {
                let s = Space::diagonal(&w).unwrap();
                let vs = vs
                    .into_iter()
                    .map(|v| CVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| C64::new(a, b))))
                    .collect();
                (s, vs)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn frame_operator_monotone((s, vs) in family()) {
            let mut prev = 0.0f64;
            for h in 1..=vs.len() {
                let op = frame_operator_of(&vs[..h], &s);
                let eig = self_adjoint_eigenvalues(&op).unwrap();
                prop_assert!(eig[0] >= -1e-10);
                prop_assert!(eig[eig.len() - 1] + 1e-10 >= prev);
                prev = eig[eig.len() - 1];
            }
        }

        #[test]
        fn reconstruction_symmetry_and_permutation((s, vs) in family(), seed in any::<u64>()) {
            let fs = FrameSequence::explicit(vs.clone(), &s).unwrap();
            let h = vs.len() - 1;
            prop_assume!(frame_bounds(&fs, h).unwrap().lower_bound > 1e-3);
            let dual = canonical_dual(&fs, h).unwrap().vectors(h).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for f in random_unit_vectors(&s, 3, seed) {
                let a: CVector = vs.iter().zip(&dual).map(|(g, d)| g * s.inner(&f, d).unwrap()).sum();
                let b: CVector = vs.iter().zip(&dual).map(|(g, d)| d * s.inner(&f, g).unwrap()).sum();
                prop_assert!(s.norm(&(&a - &f)) <= 1e-8);
                prop_assert!(s.norm(&(&a - &b)) <= 1e-8);
                let mut order: Vec<usize> = (0..vs.len()).collect();
                for _ in 0..10 {
                    order.shuffle(&mut rng);
                    let c: CVector = order.iter().map(|&i| &vs[i] * s.inner(&f, &dual[i]).unwrap()).sum();
                    prop_assert!(s.norm(&(&c - &a)) <= 1e-8);
                }
            }
        }

        #[test]
        fn gram_is_hermitian_psd((s, vs) in family()) {
            let fs = FrameSequence::explicit(vs.clone(), &s).unwrap();
            let g = gram_matrix(&fs, vs.len() - 1).unwrap();
            prop_assert!(max_abs_diff(&g, &g.adjoint()) <= 1e-12);
            let (vals, _) = hermitian_eigen(&((&g + g.adjoint()).scale(0.5)));
            prop_assert!(vals[0] >= -1e-10 * (1.0 + vals[vals.len() - 1]));
        }

        #[test]
        fn excess_preserved_by_dual((s, vs) in family()) {
            let fs = FrameSequence::explicit(vs.clone(), &s).unwrap();
            let h = vs.len() - 1;
            prop_assume!(frame_bounds(&fs, h).unwrap().lower_bound > 1e-6);
            let dual = canonical_dual(&fs, h).unwrap().vectors(h).unwrap();
            prop_assert_eq!(excess_finite(&vs, &s).unwrap(), excess_finite(&dual, &s).unwrap());
            prop_assert_eq!(excess_finite(&vs, &s).unwrap(), vs.len() - s.dim());
        }

        #[test]
        fn flags_consistent((s, vs) in family()) {
            let fs = FrameSequence::explicit(vs.clone(), &s).unwrap();
            let r = frame_bounds(&fs, vs.len() - 1).unwrap();
            let c = r.classification;
            prop_assert!(r.lower_bound <= r.upper_bound + 1e-12);
            prop_assert!(!c.parseval || c.tight);
            prop_assert!(!c.tight || c.frame);
            prop_assert_eq!(c.frame, c.bessel && c.lower_semi_frame);
        }
    }
}
