//! Finite-dimensional complex inner-product spaces with a positive-definite
//! metric, and the operator calculus built on top of them.
//!
//! A space of dimension `d` is `C^d` with `<u, v> = v^H M u`: linear in the
//! first slot, conjugate-linear in the second. Every metric computation is
//! reduced to the Euclidean case through a whitening factor `E` with
//! `M = E^H E`, so adjoints, norms and spectral calculus all run on the
//! whitened matrix `E A E^{-1}`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative Hermitian tolerance for metrics.
const HERMITIAN_TOL: f64 = 1e-12;
/// Relative tolerance for accepting an operator as self-adjoint.
const SELF_ADJOINT_TOL: f64 = 1e-8;
/// Eigenvalues at or below this fraction of the largest one count as zero.
const PD_FLOOR: f64 = 1e-13;

#[derive(Debug)]
enum Metric {
    Diagonal {
        weights: Vec<f64>,
        sqrt: Vec<f64>,
    },
    Dense {
        matrix: CMatrix,
        factor: CMatrix,
        factor_inv: CMatrix,
    },
}

/// A finite-dimensional inner-product space. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Space {
    metric: Arc<Metric>,
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; dim])
    }

    /// Diagonal metric, e.g. the atom masses of an atomic measure.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptySpace);
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::NotPositiveDefinite { eigenvalue: w });
        }
        let sqrt = weights.iter().map(|w| w.sqrt()).collect();
        Ok(Self {
            metric: Arc::new(Metric::Diagonal {
                weights: weights.to_vec(),
                sqrt,
            }),
        })
    }

    /// General Hermitian positive-definite metric.
    pub fn with_metric(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.ncols(),
            });
        }
        let scale = matrix.norm().max(f64::MIN_POSITIVE);
        let defect = (&matrix - matrix.adjoint()).norm() / scale;
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let hermitian = (&matrix + matrix.adjoint()).scale(0.5);
        let (values, _) = hermitian_eigen(&hermitian);
        if values[0] <= PD_FLOOR * values[n - 1].abs() {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: values[0],
            });
        }
        let chol = Cholesky::new(hermitian.clone()).ok_or(Error::NotPositiveDefinite {
            eigenvalue: values[0],
        })?;
        let factor = chol.l().adjoint();
        let factor_inv = factor
            .clone()
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite {
                eigenvalue: values[0],
            })?;
        Ok(Self {
            metric: Arc::new(Metric::Dense {
                matrix: hermitian,
                factor,
                factor_inv,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        match &*self.metric {
            Metric::Diagonal { weights, .. } => weights.len(),
            Metric::Dense { matrix, .. } => matrix.nrows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(&*self.metric, Metric::Diagonal { .. })
    }

    /// Diagonal entries of the metric when it is diagonal.
    pub fn diagonal_weights(&self) -> Option<&[f64]> {
        match &*self.metric {
            Metric::Diagonal { weights, .. } => Some(weights),
            Metric::Dense { .. } => None,
        }
    }

    pub fn metric(&self) -> CMatrix {
        match &*self.metric {
            Metric::Diagonal { weights, .. } => {
                CMatrix::from_diagonal(&CVector::from_iterator(
                    weights.len(),
                    weights.iter().map(|&w| C64::from(w)),
                ))
            }
            Metric::Dense { matrix, .. } => matrix.clone(),
        }
    }

    /// Whether both spaces carry the same metric (pointer or value equality).
    pub fn same_as(&self, other: &Space) -> bool {
        if Arc::ptr_eq(&self.metric, &other.metric) {
            return true;
        }
        self.dim() == other.dim() && self.metric() == other.metric()
    }

    fn check(&self, v: &CVector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `E v`, coordinates in which the metric is Euclidean.
    pub fn whiten(&self, v: &CVector) -> CVector {
        match &*self.metric {
            Metric::Diagonal { sqrt, .. } => {
                CVector::from_iterator(v.len(), v.iter().zip(sqrt).map(|(x, s)| x * *s))
            }
            Metric::Dense { factor, .. } => factor * v,
        }
    }

    /// `E^{-1} w`.
    pub fn unwhiten(&self, w: &CVector) -> CVector {
        match &*self.metric {
            Metric::Diagonal { sqrt, .. } => {
                CVector::from_iterator(w.len(), w.iter().zip(sqrt).map(|(x, s)| x / *s))
            }
            Metric::Dense { factor_inv, .. } => factor_inv * w,
        }
    }

    /// `E A`.
    fn whiten_rows(&self, a: &CMatrix) -> CMatrix {
        match &*self.metric {
            Metric::Diagonal { sqrt, .. } => {
                let mut out = a.clone();
                for (i, s) in sqrt.iter().enumerate() {
                    out.row_mut(i).scale_mut(*s);
                }
                out
            }
            Metric::Dense { factor, .. } => factor * a,
        }
    }

    /// `E^{-1} A`.
    fn unwhiten_rows(&self, a: &CMatrix) -> CMatrix {
        match &*self.metric {
            Metric::Diagonal { sqrt, .. } => {
                let mut out = a.clone();
                for (i, s) in sqrt.iter().enumerate() {
                    out.row_mut(i).scale_mut(1.0 / *s);
                }
                out
            }
            Metric::Dense { factor_inv, .. } => factor_inv * a,
        }
    }

    /// `A E^{-1}`.
    fn unwhiten_cols(&self, a: &CMatrix) -> CMatrix {
        match &*self.metric {
            Metric::Diagonal { sqrt, .. } => {
                let mut out = a.clone();
                for (j, s) in sqrt.iter().enumerate() {
                    out.column_mut(j).scale_mut(1.0 / *s);
                }
                out
            }
            Metric::Dense { factor_inv, .. } => a * factor_inv,
        }
    }

    /// `A E`.
    fn whiten_cols(&self, a: &CMatrix) -> CMatrix {
        match &*self.metric {
            Metric::Diagonal { sqrt, .. } => {
                let mut out = a.clone();
                for (j, s) in sqrt.iter().enumerate() {
                    out.column_mut(j).scale_mut(*s);
                }
                out
            }
            Metric::Dense { factor, .. } => a * factor,
        }
    }

    /// `<u, v> = v^H M u`.
    pub fn inner(&self, u: &CVector, v: &CVector) -> Result<C64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.inner_unchecked(u, v))
    }

    pub(crate) fn inner_unchecked(&self, u: &CVector, v: &CVector) -> C64 {
        match &*self.metric {
            Metric::Diagonal { weights, .. } => u
                .iter()
                .zip(v.iter())
                .zip(weights)
                .map(|((a, b), w)| a * b.conj() * *w)
                .sum(),
            Metric::Dense { matrix, .. } => v.dotc(&(matrix * u)),
        }
    }

    pub fn norm(&self, u: &CVector) -> f64 {
        self.whiten(u).norm()
    }

    /// The vector `M u`, i.e. the Riesz representer used in `<x, u> = (M u)^H x`.
    pub fn lower(&self, u: &CVector) -> CVector {
        match &*self.metric {
            Metric::Diagonal { weights, .. } => {
                CVector::from_iterator(u.len(), u.iter().zip(weights).map(|(x, w)| x * *w))
            }
            Metric::Dense { matrix, .. } => matrix * u,
        }
    }
}

/// Free-function form of [`Space::inner`].
pub fn inner(u: &CVector, v: &CVector, s: &Space) -> Result<C64> {
    s.inner(u, v)
}

/// A linear map between two spaces, stored as a `codomain.dim x domain.dim` matrix.
#[derive(Clone, Debug)]
pub struct LinearMap {
    matrix: CMatrix,
    domain: Space,
    codomain: Space,
}

impl LinearMap {
    pub fn new(matrix: CMatrix, domain: Space, codomain: Space) -> Result<Self> {
        if matrix.ncols() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() != codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: codomain.dim(),
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            matrix,
            domain,
            codomain,
        })
    }

    /// Operator on a single space.
    pub fn on(matrix: CMatrix, space: &Space) -> Result<Self> {
        Self::new(matrix, space.clone(), space.clone())
    }

    pub fn identity(space: &Space) -> Self {
        let n = space.dim();
        Self {
            matrix: CMatrix::identity(n, n),
            domain: space.clone(),
            codomain: space.clone(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    pub fn codomain(&self) -> &Space {
        &self.codomain
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        self.domain.check(v)?;
        Ok(&self.matrix * v)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        if other.codomain.dim() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                found: other.codomain.dim(),
            });
        }
        Ok(LinearMap {
            matrix: &self.matrix * &other.matrix,
            domain: other.domain.clone(),
            codomain: self.codomain.clone(),
        })
    }

    pub fn sub(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.matrix.shape() != other.matrix.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.len(),
                found: other.matrix.len(),
            });
        }
        Ok(LinearMap {
            matrix: &self.matrix - &other.matrix,
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
        })
    }

    pub fn inverse(&self) -> Result<LinearMap> {
        if self.domain.dim() != self.codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                found: self.codomain.dim(),
            });
        }
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or(Error::IllConditioned {
                condition: f64::INFINITY,
            })?;
        Ok(LinearMap {
            matrix: inv,
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
        })
    }

    /// `E_cod A E_dom^{-1}`: the matrix of the map between orthonormal bases.
    pub fn whitened(&self) -> CMatrix {
        self.domain
            .unwhiten_cols(&self.codomain.whiten_rows(&self.matrix))
    }

    /// Rebuild a map from its whitened matrix.
    fn from_whitened(w: &CMatrix, domain: &Space, codomain: &Space) -> LinearMap {
        let matrix = domain.whiten_cols(&codomain.unwhiten_rows(w));
        LinearMap {
            matrix,
            domain: domain.clone(),
            codomain: codomain.clone(),
        }
    }

    /// Singular values in metric norms, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let w = self.whitened();
        let mut s: Vec<f64> = w.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Ratio of extreme metric singular values of a square map.
    pub fn condition_number(&self) -> f64 {
        let s = self.singular_values();
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }
}

/// Hilbert adjoint: `<A u, v>_cod = <u, A* v>_dom`, `A* = M_dom^{-1} A^H M_cod`.
pub fn adjoint(a: &LinearMap) -> LinearMap {
    let w = a.whitened().adjoint();
    LinearMap::from_whitened(&w, &a.codomain, &a.domain)
}

/// Largest singular value w.r.t. the metric norms.
pub fn operator_norm(a: &LinearMap) -> f64 {
    a.singular_values().first().copied().unwrap_or(0.0)
}

/// Hermitian eigendecomposition with eigenvalues ascending and each
/// eigenvector's first non-negligible component made real and positive.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let scale = col.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if let Some(pivot) = col.iter().find(|c| c.norm() > 1e-8 * scale).copied() {
            let phase = pivot.conj() / pivot.norm();
            col *= phase;
        }
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Whitened, Hermitized matrix of a self-adjoint operator; errors when the
/// operator is not self-adjoint to `SELF_ADJOINT_TOL`.
fn whitened_self_adjoint(a: &LinearMap) -> Result<CMatrix> {
    if a.domain.dim() != a.codomain.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.domain.dim(),
            found: a.codomain.dim(),
        });
    }
    let w = a.whitened();
    let scale = w.norm().max(f64::MIN_POSITIVE);
    let defect = (&w - w.adjoint()).norm() / scale;
    if defect > SELF_ADJOINT_TOL {
        return Err(Error::NotSelfAdjoint { defect });
    }
    Ok((&w + w.adjoint()).scale(0.5))
}

/// Eigenvalues (ascending) of a self-adjoint operator.
pub fn self_adjoint_eigenvalues(a: &LinearMap) -> Result<Vec<f64>> {
    let w = whitened_self_adjoint(a)?;
    Ok(hermitian_eigen(&w).0)
}

/// `A^p` for a self-adjoint positive-definite `A`.
pub fn spd_power(a: &LinearMap, p: f64) -> Result<LinearMap> {
    let w = whitened_self_adjoint(a)?;
    let (values, vectors) = hermitian_eigen(&w);
    let top = values.last().copied().unwrap_or(0.0).abs();
    if let Some(&bad) = values.iter().find(|&&l| l <= PD_FLOOR * top || top == 0.0) {
        return Err(Error::NotPositiveDefinite { eigenvalue: bad });
    }
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, l) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l.powf(p));
    }
    let root = &scaled * vectors.adjoint();
    debug_assert_eq!(root.nrows(), n);
    Ok(LinearMap::from_whitened(&root, &a.domain, &a.codomain))
}

pub fn sqrt_spd(a: &LinearMap) -> Result<LinearMap> {
    spd_power(a, 0.5)
}

pub fn inv_sqrt_spd(a: &LinearMap) -> Result<LinearMap> {
    spd_power(a, -0.5)
}

/// The renormed space `<f, g>' = <S^{-1/2} f, S^{-1/2} g>`, metric
/// `(S^{-1/2})^H M S^{-1/2}`.
pub fn renormed_space(s: &Space, op: &LinearMap) -> Result<Space> {
    if op.domain.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: op.domain.dim(),
        });
    }
    let r = inv_sqrt_spd(op)?;
    let m = r.matrix.adjoint() * s.metric() * &r.matrix;
    let m = (&m + m.adjoint()).scale(0.5);
    Space::with_metric(m)
}

/// Rank-one map `f -> <f, v> u` on a single space.
pub fn rank_one(u: &CVector, v: &CVector, space: &Space) -> Result<LinearMap> {
    space.check(u)?;
    space.check(v)?;
    let lowered = space.lower(v);
    LinearMap::on(u * lowered.adjoint(), space)
}

/// Component-wise real-to-complex conversion.
pub fn complexify(v: &[f64]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&x| C64::from(x)))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn v(xs: &[f64]) -> CVector {
        complexify(xs)
    }

    #[test]
    fn inner_examples() {
        let s = Space::diagonal(&[0.5, 0.5]).unwrap();
        assert_eq!(s.inner(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), ZERO);
        assert!((s.inner(&v(&[1.0, 1.0]), &v(&[1.0, 1.0])).unwrap() - ONE).norm() < 1e-15);
        let s = Space::diagonal(&[0.25, 0.75]).unwrap();
        let ip = s.inner(&v(&[1.0, 1.0]), &v(&[1.0, -1.0])).unwrap();
        assert!((ip - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inner_is_linear_in_first_slot() {
        let s = Space::diagonal(&[0.3, 0.7]).unwrap();
        let u = CVector::from_vec(vec![c(1.0, 2.0), c(0.5, -1.0)]);
        let w = CVector::from_vec(vec![c(-1.0, 0.25), c(2.0, 1.0)]);
        let a = c(0.0, 1.0);
        let lhs = s.inner(&(&u * a), &w).unwrap();
        let rhs = a * s.inner(&u, &w).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
        let lhs = s.inner(&u, &(&w * a)).unwrap();
        let rhs = a.conj() * s.inner(&u, &w).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn inner_dimension_mismatch() {
        let s = Space::euclidean(2).unwrap();
        let err = s.inner(&v(&[1.0]), &v(&[1.0, 0.0])).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn rejects_bad_metrics() {
        assert_eq!(Space::euclidean(0).unwrap_err(), Error::EmptySpace);
        assert!(matches!(
            Space::diagonal(&[1.0, 0.0]),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let m = CMatrix::from_row_slice(2, 2, &[ONE, c(2.0, 0.0), c(2.0, 0.0), ONE]);
        assert!(matches!(
            Space::with_metric(m),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let m = CMatrix::from_row_slice(2, 2, &[ONE, c(0.1, 0.0), c(0.2, 0.0), ONE]);
        assert!(matches!(Space::with_metric(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn adjoint_examples() {
        let s = Space::diagonal(&[0.3, 0.7]).unwrap();
        let id = LinearMap::identity(&s);
        assert!(max_abs_diff(adjoint(&id).matrix(), id.matrix()) < 1e-15);

        let e = Space::euclidean(2).unwrap();
        let d = LinearMap::on(CMatrix::from_diagonal(&v(&[2.0, 3.0])), &e).unwrap();
        assert!(max_abs_diff(adjoint(&d).matrix(), d.matrix()) < 1e-15);

        // <Au, v> = 1/4 u_2 conj(v_1) forces (A*)_{21} = (1/4)/(3/4) = 1/3.
        let s = Space::diagonal(&[0.25, 0.75]).unwrap();
        let a = LinearMap::on(CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]), &s).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, c(1.0 / 3.0, 0.0), ZERO]);
        assert!(max_abs_diff(adjoint(&a).matrix(), &expected) < 1e-15);
    }

    #[test]
    fn adjoint_defining_identity_on_basis() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0, 0.0), c(0.5, 0.3), c(0.5, -0.3), c(1.0, 0.0)],
        );
        let dom = Space::with_metric(m).unwrap();
        let cod = Space::diagonal(&[0.2, 0.5, 1.5]).unwrap();
        let a = LinearMap::new(
            CMatrix::from_fn(3, 2, |i, j| c(i as f64 - j as f64, (i * j) as f64 + 0.5)),
            dom.clone(),
            cod.clone(),
        )
        .unwrap();
        let astar = adjoint(&a);
        for i in 0..2 {
            for j in 0..3 {
                let mut u = CVector::zeros(2);
                u[i] = ONE;
                let mut w = CVector::zeros(3);
                w[j] = ONE;
                let lhs = cod.inner(&a.apply(&u).unwrap(), &w).unwrap();
                let rhs = dom.inner(&u, &astar.apply(&w).unwrap()).unwrap();
                assert!((lhs - rhs).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn sqrt_examples() {
        let e = Space::euclidean(2).unwrap();
        let id = LinearMap::identity(&e);
        assert!(max_abs_diff(sqrt_spd(&id).unwrap().matrix(), id.matrix()) < 1e-14);
        let d = LinearMap::on(CMatrix::from_diagonal(&v(&[4.0, 9.0])), &e).unwrap();
        let expected = CMatrix::from_diagonal(&v(&[2.0, 3.0]));
        assert!(max_abs_diff(sqrt_spd(&d).unwrap().matrix(), &expected) < 1e-14);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let e = Space::euclidean(2).unwrap();
        let d = LinearMap::on(CMatrix::from_diagonal(&v(&[4.0, -1.0])), &e).unwrap();
        match sqrt_spd(&d) {
            Err(Error::NotPositiveDefinite { eigenvalue }) => assert!((eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn renormed_examples() {
        let e = Space::euclidean(2).unwrap();
        let same = renormed_space(&e, &LinearMap::identity(&e)).unwrap();
        assert!(max_abs_diff(&same.metric(), &e.metric()) < 1e-14);
        let s = LinearMap::on(CMatrix::from_diagonal(&v(&[4.0, 1.0])), &e).unwrap();
        let r = renormed_space(&e, &s).unwrap();
        assert!(max_abs_diff(&r.metric(), &CMatrix::from_diagonal(&v(&[0.25, 1.0]))) < 1e-14);
    }

    #[test]
    fn operator_norm_examples() {
        let s = Space::diagonal(&[0.1, 2.0]).unwrap();
        assert!((operator_norm(&LinearMap::identity(&s)) - 1.0).abs() < 1e-12);
        let e = Space::euclidean(2).unwrap();
        let d = LinearMap::on(CMatrix::from_diagonal(&v(&[2.0, 3.0])), &e).unwrap();
        assert!((operator_norm(&d) - 3.0).abs() < 1e-12);
        // f -> <f, w> u has norm |u||w| in any metric.
        let s = Space::diagonal(&[0.25, 0.75, 2.0]).unwrap();
        let u = CVector::from_vec(vec![c(1.0, 1.0), c(0.0, 2.0), c(-1.0, 0.0)]);
        let w = CVector::from_vec(vec![c(0.5, 0.0), c(1.0, -1.0), c(0.0, 0.3)]);
        let r = rank_one(&u, &w, &s).unwrap();
        let expected = s.norm(&u) * s.norm(&w);
        assert!((operator_norm(&r) - expected).abs() < 1e-8 * expected);
    }

    #[test]
    fn dim_one_supported() {
        let s = Space::diagonal(&[1.0]).unwrap();
        let a = LinearMap::on(CMatrix::from_element(1, 1, c(4.0, 0.0)), &s).unwrap();
        assert!((sqrt_spd(&a).unwrap().matrix()[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigen_sign_convention() {
        let h = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals[0] <= vals[1]);
        for j in 0..2 {
            let first = vecs[(0, j)];
            assert!(first.im.abs() < 1e-14 && first.re > 0.0);
        }
    }
}
