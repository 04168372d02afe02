//! Seeded generators for test measures, operators, seeds and linear systems.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::hilbert::{CMatrix, CVector, LinearMap, Space, C64};
use crate::measures::Measure;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Probability measure with atoms at `frac(offset + k√2)`, `k = 1..=dim`,
/// and masses drawn from `[0.2, 1)` then normalized.
pub fn generic_atomic<R: Rng>(dim: usize, rng: &mut R) -> Result<Measure> {
    let offset: f64 = rng.random();
    let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let atoms = (1..=dim)
        .zip(raw)
        .map(|(k, p)| ((offset + k as f64 * SQRT_2).rem_euclid(1.0), p / total))
        .collect();
    Measure::atomic(atoms)
}

pub fn complex_gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn real_gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), 0.0))
}

/// Invertible map `domain -> codomain` with metric condition number at most
/// `max_cond` (rejection sampling on `I + G/√(2d)`).
pub fn random_invertible<R: Rng>(domain: &Space, codomain: &Space, max_cond: f64, rng: &mut R) -> LinearMap {
    let d = domain.dim();
    loop {
        let g = complex_gaussian(d, d, rng).scale(1.0 / (2.0 * d as f64).sqrt());
        let m = CMatrix::identity(d, d) + g;
        let op = LinearMap::new(m, domain.clone(), codomain.clone()).expect("square");
        let c = op.condition_number();
        if c.is_finite() && c <= max_cond {
            return op;
        }
    }
}

/// Positive real `g₀` with `<g₀, 1>_μ = 1`, values drawn from `[0.5, 2)`
/// before normalization.
pub fn admissible_g0<R: Rng>(mu: &Measure, rng: &mut R) -> CVector {
    let atoms = mu.atoms().expect("atomic measure");
    let raw: Vec<f64> = atoms.iter().map(|_| rng.random_range(0.5..2.0)).collect();
    let pairing: f64 = raw.iter().zip(atoms).map(|(u, a)| u * a.1).sum();
    CVector::from_iterator(raw.len(), raw.iter().map(|u| C64::from(u / pairing)))
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let qr = complex_gaussian(n, n, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = r.diagonal().map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) });
    q * CMatrix::from_diagonal(&phases)
}

/// Consistent system `Ax = b` with `‖b‖ = 1`, `rank` nonzero singular values
/// spread geometrically over `[1/cond, 1]`.
pub fn random_consistent_system<R: Rng>(rows: usize, cols: usize, rank: usize, cond: f64, rng: &mut R) -> (CMatrix, CVector) {
    let rank = rank.clamp(1, rows.min(cols));
    let u = haar_unitary(rows, rng);
    let v = haar_unitary(cols, rng);
    let mut sigma = CMatrix::zeros(rows, cols);
    for i in 0..rank {
        let t = if rank == 1 { 0.0 } else { i as f64 / (rank - 1) as f64 };
        sigma[(i, i)] = C64::new(cond.powf(-t), 0.0);
    }
    let a = u * sigma * v.adjoint();
    let x = complex_gaussian(cols, 1, rng).column(0).into_owned();
    let b = &a * x;
    let nb = b.norm();
    (a, b / C64::new(nb, 0.0))
}

/// `R(θ) diag(1, 2)`: a non-normal, non-diagonal 2×2 map.
pub fn rotation_like(theta: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::from(c), C64::from(-2.0 * s), C64::from(s), C64::from(2.0 * c)],
    )
}
