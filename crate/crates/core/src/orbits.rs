//! Explicit operator constructions for orbit frames over atomic measures and
//! the verifiers that compare them against Kaczmarz auxiliary sequences.
//!
//! Notation: `ν` is an atomic probability measure with atoms `x_j`, masses
//! `p_j`, `z_j = e^{2πix_j}`; `M_e` is multiplication by `e^{2πix}`.
//!
//! * singular shift `L = M_e − 1 ⊗ e_{−1}`, orbit `Lⁿ1 = h_n`;
//! * perturbed conjugate `T = V⁻¹M_eV − V⁻¹1 ⊗ V*e_{−1} = V⁻¹LV`, `g₀ = V⁻¹1`,
//!   frame operator `S = V⁻¹(V⁻¹)*`, `U = V S^{1/2}` unitary;
//! * main singular form `T = M_e − g₀ ⊗ M_e^* 1`, orbit `g₀ h_n` where `h_n`
//!   is the auxiliary sequence in `L²(g₀μ)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{frame_bounds, frame_operator_of, orbit_vectors, FrameSequence, IndexSet};
use crate::hilbert::{
    adjoint, complexify, inv_sqrt_spd, operator_norm, rank_one, renormed_space,
    self_adjoint_eigenvalues, sqrt_spd, CMatrix, CVector, LinearMap, Space, C64, ONE,
};
use crate::kaczmarz::{
    auxiliary_sequence, dual_auxiliary_sequence, effectiveness_test, random_unit_vectors,
    EffectivenessReport, Exponentials, ExplicitStream, Mapped, System, VectorStream,
};
use crate::measures::{exp_vector, fourier_coefficient, ones, reweighted, space_of, Measure};

/// Largest accepted condition number for `V`.
pub const MAX_CONDITION: f64 = 1e8;
/// Tolerance for `<g₀, 1>_μ = 1`.
pub const SEED_TOL: f64 = 1e-9;
/// Relative level below which a defect counts as zero in equivalence checks.
pub const ZERO_TOL: f64 = 1e-8;
/// Default relative change of `S_h` across a doubling accepted as stabilized.
pub const STABILIZATION_TOL: f64 = 1e-10;
pub const STABILIZATION_START: usize = 64;
pub const STABILIZATION_CAP: usize = 1 << 16;

#[derive(Clone, Debug)]
pub enum Construction {
    SingularShift { nu: Measure },
    PerturbedConjugate { nu: Measure, v: LinearMap },
    Mainsingular { mu: Measure },
    ExplicitMatrix,
}

/// An operator together with its designated orbit seed.
#[derive(Clone, Debug)]
pub struct OrbitOperator {
    map: LinearMap,
    construction: Construction,
    g0: CVector,
}

/// Multiplication by `e^{2πinx}` on `L²(ν)` for atomic `ν`.
pub fn multiplication_by_exponential(nu: &Measure, n: i64) -> Result<LinearMap> {
    nu.require_atoms()?;
    LinearMap::on(CMatrix::from_diagonal(&exp_vector(nu, n)), &space_of(nu))
}

/// Multiplication by a function given by its atom values.
pub fn multiplication_by(values: &CVector, space: &Space) -> Result<LinearMap> {
    LinearMap::on(CMatrix::from_diagonal(values), space)
}

fn max_column_defect(a: &CMatrix, f: impl Fn(&CVector) -> CVector) -> f64 {
    let n = a.ncols();
    let mut worst = 0.0f64;
    for j in 0..n {
        let mut b = CVector::zeros(n);
        b[j] = ONE;
        let expected = f(&b);
        let d = (a.column(j) - expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(d);
    }
    worst
}

impl OrbitOperator {
    pub fn explicit(map: LinearMap, g0: CVector) -> Result<Self> {
        if map.domain().dim() != map.codomain().dim() || g0.len() != map.domain().dim() {
            return Err(Error::DimensionMismatch {
                expected: map.domain().dim(),
                found: g0.len(),
            });
        }
        Ok(Self {
            map,
            construction: Construction::ExplicitMatrix,
            g0,
        })
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }

    pub fn space(&self) -> &Space {
        self.map.domain()
    }

    pub fn g0(&self) -> &CVector {
        &self.g0
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    /// `g₀, T g₀, ..., T^{horizon} g₀`.
    pub fn orbit(&self, horizon: usize) -> Vec<CVector> {
        orbit_vectors(self.map.matrix(), &self.g0, horizon + 1)
    }

    pub fn frame_sequence(&self) -> FrameSequence {
        FrameSequence::orbit(&self.map, &self.g0, IndexSet::Natural).expect("validated operator")
    }

    /// Largest entry deviation between the stored matrix and the defining
    /// formula applied to each coordinate basis vector.
    pub fn defining_identity_defect(&self) -> f64 {
        let a = self.map.matrix();
        match &self.construction {
            Construction::SingularShift { nu } => {
                let s = space_of(nu);
                let e1 = exp_vector(nu, 1);
                let em1 = exp_vector(nu, -1);
                let one = ones(nu);
                max_column_defect(a, |f| {
                    f.component_mul(&e1) - &one * s.inner_unchecked(f, &em1)
                })
            }
            Construction::PerturbedConjugate { nu, v } => {
                let h = v.domain().clone();
                let vinv = v.inverse().expect("invertible by construction");
                let vstar = adjoint(v);
                let e1 = exp_vector(nu, 1);
                let w = vstar.matrix() * exp_vector(nu, -1);
                let g0 = vinv.matrix() * ones(nu);
                max_column_defect(a, |f| {
                    let moved = vinv.matrix() * (v.matrix() * f).component_mul(&e1);
                    moved - &g0 * h.inner_unchecked(f, &w)
                })
            }
            Construction::Mainsingular { mu } => {
                let s = space_of(mu);
                let e1 = exp_vector(mu, 1);
                let one = ones(mu);
                max_column_defect(a, |f| {
                    let ef = f.component_mul(&e1);
                    let c = s.inner_unchecked(&ef, &one);
                    ef - &self.g0 * c
                })
            }
            Construction::ExplicitMatrix => 0.0,
        }
    }
}

/// `L f = e^{2πix} f − <f, e^{−2πix}> 1` on `L²(ν)`, seed `1`.
pub fn build_singular_shift(nu: &Measure) -> Result<OrbitOperator> {
    let atoms = nu.require_atoms()?;
    nu.require_probability()?;
    let s = space_of(nu);
    let z = exp_vector(nu, 1);
    let pz = CVector::from_iterator(z.len(), z.iter().zip(atoms).map(|(zj, a)| zj * a.1));
    let one = ones(nu);
    let matrix = CMatrix::from_diagonal(&z) - &one * pz.transpose();
    Ok(OrbitOperator {
        map: LinearMap::on(matrix, &s)?,
        construction: Construction::SingularShift { nu: nu.clone() },
        g0: one,
    })
}

/// Everything built from an invertible `V : H → L²(ν)`.
#[derive(Clone, Debug)]
pub struct GenbackwardBundle {
    pub nu: Measure,
    pub h: Space,
    pub l2: Space,
    pub v: LinearMap,
    pub v_inv: LinearMap,
    /// `S = V⁻¹ (V⁻¹)*` on `H`.
    pub s: LinearMap,
    pub s_half: LinearMap,
    pub s_neg_half: LinearMap,
    /// `U = V S^{1/2} : H → L²(ν)`.
    pub u: LinearMap,
    pub t: OrbitOperator,
    pub condition: f64,
}

/// `V` as a map on `L²(ν)` itself.
pub fn v_on_l2(matrix: CMatrix, nu: &Measure) -> Result<LinearMap> {
    LinearMap::on(matrix, &space_of(nu))
}

pub fn build_perturbed_conjugate(v: &LinearMap, nu: &Measure) -> Result<GenbackwardBundle> {
    nu.require_atoms()?;
    nu.require_probability()?;
    let l2 = space_of(nu);
    if !v.codomain().same_as(&l2) {
        return Err(Error::Parameter {
            field: "V".into(),
            reason: "codomain must be L²(ν) of the given measure".into(),
        });
    }
    if v.domain().dim() != l2.dim() {
        return Err(Error::DimensionMismatch {
            expected: l2.dim(),
            found: v.domain().dim(),
        });
    }
    let condition = v.condition_number();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let h = v.domain().clone();
    let v_inv = v.inverse()?;
    let s = v_inv.compose(&adjoint(&v_inv))?;
    let s_half = sqrt_spd(&s)?;
    let s_neg_half = inv_sqrt_spd(&s)?;
    let u = v.compose(&s_half)?;

    let m_e = multiplication_by_exponential(nu, 1)?;
    let conj = v_inv.compose(&m_e)?.compose(v)?;
    let g0 = v_inv.apply(&ones(nu))?;
    let w = adjoint(v).apply(&exp_vector(nu, -1))?;
    let t = conj.sub(&rank_one(&g0, &w, &h)?)?;
    Ok(GenbackwardBundle {
        nu: nu.clone(),
        h,
        l2,
        v: v.clone(),
        v_inv,
        s,
        s_half,
        s_neg_half,
        u,
        t: OrbitOperator {
            map: t,
            construction: Construction::PerturbedConjugate {
                nu: nu.clone(),
                v: v.clone(),
            },
            g0,
        },
        condition,
    })
}

impl GenbackwardBundle {
    /// `‖U*U − I‖`.
    pub fn unitarity_defect(&self) -> f64 {
        let uu = adjoint(&self.u).compose(&self.u).expect("shapes agree");
        operator_norm(&uu.sub(&LinearMap::identity(&self.h)).expect("shapes agree"))
    }

    /// `φ_n = S^{1/2}U* e_n`.
    pub fn phi_stream(&self) -> Mapped {
        let op = self.s_half.compose(&adjoint(&self.u)).expect("shapes agree");
        Mapped::new(op, Arc::new(Exponentials::new(&self.nu))).expect("shapes agree")
    }

    /// `ψ_n = S^{−1/2}U* e_n`.
    pub fn psi_stream(&self) -> Mapped {
        let op = self.s_neg_half.compose(&adjoint(&self.u)).expect("shapes agree");
        Mapped::new(op, Arc::new(Exponentials::new(&self.nu))).expect("shapes agree")
    }

    fn m_e(&self) -> LinearMap {
        multiplication_by_exponential(&self.nu, 1).expect("atomic")
    }

    /// `W = S^{1/2}U* M_e U S^{−1/2}`.
    pub fn conjugated_operator(&self) -> LinearMap {
        self.s_half
            .compose(&adjoint(&self.u))
            .and_then(|a| a.compose(&self.m_e()))
            .and_then(|a| a.compose(&self.u))
            .and_then(|a| a.compose(&self.s_neg_half))
            .expect("shapes agree")
    }

    /// `ℳ = S^{−1/2}U* M_e U S^{1/2}` and its seed `S^{−1/2}U* 1`.
    pub fn dual_orbit_operator(&self) -> (LinearMap, CVector) {
        let ustar = adjoint(&self.u);
        let m = self
            .s_neg_half
            .compose(&ustar)
            .and_then(|a| a.compose(&self.m_e()))
            .and_then(|a| a.compose(&self.u))
            .and_then(|a| a.compose(&self.s_half))
            .expect("shapes agree");
        let seed = self
            .s_neg_half
            .apply(&ustar.apply(&ones(&self.nu)).expect("shapes agree"))
            .expect("shapes agree");
        (m, seed)
    }

    /// `H′` with `<f, g>' = <S^{−1/2} f, S^{−1/2} g>`.
    pub fn renormed(&self) -> Result<Space> {
        renormed_space(&self.h, &self.s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    pub horizon: usize,
    /// Relative Frobenius change of `S_h` across the last doubling.
    pub change: f64,
    pub stable: bool,
}

/// Doubles the horizon from `start` until `‖S_h − S_{h/2}‖ ≤ tol ‖S_h‖` or `cap`.
pub fn stabilized_horizon(t: &OrbitOperator, start: usize, cap: usize, tol: f64) -> Stabilization {
    let space = t.space();
    let n = space.dim();
    let a = t.map.matrix();
    let mut s = CMatrix::zeros(n, n);
    let mut g = t.g0.clone();
    let mut prev: Option<CMatrix> = None;
    let mut next_check = start.max(1);
    let mut count = 0usize;
    loop {
        let lowered = space.lower(&g);
        s.ger(ONE, &g, &lowered.conjugate(), ONE);
        g = a * &g;
        count += 1;
        if count == next_check + 1 {
            let h = next_check;
            if let Some(p) = &prev {
                let change = (&s - p).norm() / s.norm().max(f64::MIN_POSITIVE);
                if change <= tol || h * 2 > cap {
                    return Stabilization {
                        horizon: h,
                        change,
                        stable: change <= tol,
                    };
                }
            }
            prev = Some(s.clone());
            next_check = h * 2;
        }
    }
}

pub fn default_stabilization(t: &OrbitOperator) -> Stabilization {
    stabilized_horizon(t, STABILIZATION_START, STABILIZATION_CAP, STABILIZATION_TOL)
}

/// `‖T S_h T* + g₀ ⊗ g₀ − S_h‖` (equals `‖g_{h+1} ⊗ g_{h+1}‖`).
pub fn orbit_recursion_defect(t: &OrbitOperator, horizon: usize) -> f64 {
    let space = t.space();
    let s_h = frame_operator_of(&t.orbit(horizon), space);
    let tst = t.map.compose(&s_h).and_then(|a| a.compose(&adjoint(&t.map))).expect("square");
    let g0g0 = rank_one(&t.g0, &t.g0, space).expect("dims");
    let lhs = LinearMap::on(tst.matrix() + g0g0.matrix(), space).expect("dims");
    operator_norm(&lhs.sub(&s_h).expect("dims"))
}

/// `σ₂/σ₁` of `T − V⁻¹ M_e V`.
pub fn rank_one_ratio(bundle: &GenbackwardBundle) -> f64 {
    let conj = bundle
        .v_inv
        .compose(&bundle.m_e())
        .and_then(|a| a.compose(&bundle.v))
        .expect("dims");
    let diff = bundle.t.map.sub(&conj).expect("dims");
    let sv = diff.singular_values();
    match sv.as_slice() {
        [first, second, ..] if *first > 0.0 => second / first,
        _ => 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TformReport {
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    /// `sup_f |Σ_{n≤h} |<f, Tⁿg₀>|² − ‖(V⁻¹)* f‖²| / ‖f‖²`.
    pub frame_identity_defect: f64,
    /// `‖S_h − V⁻¹(V⁻¹)*‖`.
    pub operator_defect: f64,
    pub measured_bounds: (f64, f64),
    pub predicted_bounds: (f64, f64),
    pub bound_relative_error: f64,
    pub rank_one_ratio: f64,
    pub recursion_defect: f64,
    pub defining_identity_defect: f64,
}

/// Frame identity of the converse direction on random vectors.
pub fn verify_tform(bundle: &GenbackwardBundle, horizon: usize, trials: usize, seed: u64) -> Result<TformReport> {
    let h = &bundle.h;
    let orbit = bundle.t.orbit(horizon);
    let s_h = frame_operator_of(&orbit, h);
    let vinv_star = adjoint(&bundle.v_inv);
    let mut worst = 0.0f64;
    for f in random_unit_vectors(h, trials, seed) {
        let lf = h.lower(&f);
        let sum: f64 = orbit.iter().map(|g| lf.dotc(g).norm_sqr()).sum();
        let target = bundle.l2.norm(&vinv_star.apply(&f)?).powi(2);
        worst = worst.max((sum - target).abs());
    }
    let report = frame_bounds(&FrameSequence::realized(orbit, h)?, horizon)?;
    let eig = self_adjoint_eigenvalues(&bundle.s)?;
    let predicted = (eig[0], eig[eig.len() - 1]);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    Ok(TformReport {
        horizon,
        trials,
        seed,
        frame_identity_defect: worst,
        operator_defect: operator_norm(&s_h.sub(&bundle.s)?),
        measured_bounds: (report.lower_bound, report.upper_bound),
        predicted_bounds: predicted,
        bound_relative_error: rel(report.lower_bound, predicted.0).max(rel(report.upper_bound, predicted.1)),
        rank_one_ratio: rank_one_ratio(bundle),
        recursion_defect: orbit_recursion_defect(&bundle.t, horizon),
        defining_identity_defect: bundle.t.defining_identity_defect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenbackwardReport {
    pub horizon: usize,
    pub unitarity_defect: f64,
    /// `max_n ‖aux_n − Tⁿg₀‖ / max_n ‖aux_n‖`.
    pub agreement: f64,
    pub pair_effectiveness: EffectivenessReport,
}

pub fn verify_genbackward(
    bundle: &GenbackwardBundle,
    horizon: usize,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<GenbackwardReport> {
    let phi = bundle.phi_stream();
    let psi = bundle.psi_stream();
    let aux = dual_auxiliary_sequence(&phi, &psi, horizon, &bundle.h)?;
    let orbit = bundle.t.orbit(horizon);
    let agreement = relative_sequence_gap(aux.vectors(), &orbit, &bundle.h);
    let pair_effectiveness = effectiveness_test(System::Pair(&phi, &psi), &bundle.h, trials, horizon, tol, seed)?;
    Ok(GenbackwardReport {
        horizon,
        unitarity_defect: bundle.unitarity_defect(),
        agreement,
        pair_effectiveness,
    })
}

fn relative_sequence_gap(a: &[CVector], b: &[CVector], s: &Space) -> f64 {
    let scale = a.iter().map(|v| s.norm(v)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| s.norm(&(x - y))).fold(0.0, f64::max) / scale
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KaczmarzclassReport {
    pub horizon: usize,
    /// `max(|A′−1|, |B′−1|)` for `{Tⁿg₀}` in `H′`.
    pub parseval_defect: f64,
    /// Gap between `{Tⁿg₀}` and the auxiliary sequence of `{Wⁿg₀}` in `H′`.
    pub aux_agreement: f64,
    /// `‖W*W − I‖` in `H`.
    pub unitarity_defect: f64,
    /// `‖[USU*, M_{e^{−2πix}}]‖` in `L²(ν)`.
    pub commutator_norm: f64,
    pub unitary: bool,
    pub commutes: bool,
    pub equivalence_agrees: bool,
}

pub fn verify_kaczmarzclass(bundle: &GenbackwardBundle, horizon: usize) -> Result<KaczmarzclassReport> {
    let h_prime = bundle.renormed()?;
    let orbit = bundle.t.orbit(horizon);
    let r = frame_bounds(&FrameSequence::realized(orbit.clone(), &h_prime)?, horizon)?;
    let parseval_defect = (r.lower_bound - 1.0).abs().max((r.upper_bound - 1.0).abs());

    let w = bundle.conjugated_operator();
    let w_orbit = orbit_vectors(w.matrix(), &bundle.t.g0, horizon + 1);
    let aux = auxiliary_sequence(&ExplicitStream::new(w_orbit)?, horizon, &h_prime)?;
    let aux_agreement = relative_sequence_gap(aux.vectors(), &orbit, &h_prime);

    let ww = adjoint(&w).compose(&w)?;
    let unitarity_defect = operator_norm(&ww.sub(&LinearMap::identity(&bundle.h))?);

    let usu = bundle.u.compose(&bundle.s)?.compose(&adjoint(&bundle.u))?;
    let m = multiplication_by_exponential(&bundle.nu, -1)?;
    let comm = usu.compose(&m)?.sub(&m.compose(&usu)?)?;
    let commutator_norm = operator_norm(&comm);
    let unitary = unitarity_defect <= ZERO_TOL;
    let commutes = commutator_norm <= ZERO_TOL * operator_norm(&usu);
    Ok(KaczmarzclassReport {
        horizon,
        parseval_defect,
        aux_agreement,
        unitarity_defect,
        commutator_norm,
        unitary,
        commutes,
        equivalence_agrees: unitary == commutes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DextrodualReport {
    pub horizon: usize,
    pub seed: u64,
    /// `sup_f ‖f − Σ_{n≤h} <f, Tⁿg₀> ℳⁿψ₀‖ / ‖f‖`.
    pub reconstruction_residual: f64,
    /// `(M, B(M) from the dual orbit, B(M) from Fourier coefficients)`.
    pub growth_curve: Vec<(usize, f64, f64)>,
    /// Largest relative gap between the two growth routes.
    pub route_gap: f64,
}

/// The dual orbit `ℳⁿ(S^{−1/2}U*1)` and its Bessel-sum growth.
pub fn dextrodual_orbit(
    bundle: &GenbackwardBundle,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<(FrameSequence, DextrodualReport)> {
    let (m, psi0) = bundle.dual_orbit_operator();
    let dual = FrameSequence::orbit(&m, &psi0, IndexSet::Natural)?;
    let psis = orbit_vectors(m.matrix(), &psi0, horizon + 1);
    let orbit = bundle.t.orbit(horizon);
    let h = &bundle.h;

    let mut residual = 0.0f64;
    for f in random_unit_vectors(h, trials, seed) {
        let lf = h.lower(&f);
        let mut rec = CVector::zeros(f.len());
        for (g, p) in orbit.iter().zip(&psis) {
            rec.axpy(g.dotc(&lf), p, ONE);
        }
        residual = residual.max(h.norm(&(rec - &f)));
    }

    let g0 = &bundle.t.g0;
    let lg0 = h.lower(g0);
    let mut curve = Vec::with_capacity(horizon + 1);
    let (mut b_orbit, mut b_fourier, mut gap) = (0.0f64, 0.0f64, 0.0f64);
    for (n, p) in psis.iter().enumerate() {
        b_orbit += lg0.dotc(p).norm_sqr();
        b_fourier += fourier_coefficient(&bundle.nu, n as i64).norm_sqr();
        gap = gap.max((b_orbit - b_fourier).abs() / b_fourier.max(1e-300));
        curve.push((n, b_orbit, b_fourier));
    }
    Ok((
        dual,
        DextrodualReport {
            horizon,
            seed,
            reconstruction_residual: residual,
            growth_curve: curve,
            route_gap: gap,
        },
    ))
}

fn check_seed_pairing(mu: &Measure, g0: &CVector) -> Result<()> {
    let s = space_of(mu);
    let pairing = s.inner(g0, &ones(mu))?;
    if (pairing - ONE).norm() > SEED_TOL {
        return Err(Error::InvalidSeed(format!("<g0, 1> = {pairing}, expected 1")));
    }
    Ok(())
}

/// `T f = e^{2πix} f − <e^{2πix} f, 1>_μ g₀` on `L²(μ)`.
pub fn build_mainsingular(mu: &Measure, g0: &CVector) -> Result<OrbitOperator> {
    let atoms = mu.require_atoms()?;
    if g0.len() != atoms.len() {
        return Err(Error::DimensionMismatch {
            expected: atoms.len(),
            found: g0.len(),
        });
    }
    check_seed_pairing(mu, g0)?;
    let z = exp_vector(mu, 1);
    let pz = CVector::from_iterator(z.len(), z.iter().zip(atoms).map(|(zj, a)| zj * a.1));
    let matrix = CMatrix::from_diagonal(&z) - g0 * pz.transpose();
    Ok(OrbitOperator {
        map: LinearMap::on(matrix, &space_of(mu))?,
        construction: Construction::Mainsingular { mu: mu.clone() },
        g0: g0.clone(),
    })
}

fn real_positive(g0: &CVector) -> Result<Vec<f64>> {
    g0.iter()
        .map(|g| {
            if g.im.abs() <= 1e-12 * g.norm().max(1.0) && g.re > 0.0 {
                Ok(g.re)
            } else {
                Err(Error::InvalidSeed(format!("g0 value {g} is not positive real")))
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropExistReport {
    pub horizon: usize,
    pub seed: u64,
    /// Masses of the reweighted measure `g₀μ`.
    pub reweighted_masses: Vec<f64>,
    /// `max_n ‖g₀h_n − Tⁿg₀‖ / max_n ‖Tⁿg₀‖` in `L²(μ)`.
    pub discrepancy: f64,
    /// `sup_f ‖f − Σ_{n≤h} <f, g_n>_μ e_n‖ / ‖f‖`.
    pub reconstruction_residual: f64,
}

/// Builds `g_n` as `g₀ h_n` and as `Tⁿ g₀`, and checks dextroduality to the
/// exponentials.
pub fn verify_prop_exist(
    mu: &Measure,
    g0: &CVector,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<PropExistReport> {
    real_positive(g0)?;
    let t = build_mainsingular(mu, g0)?;
    let s = space_of(mu);
    let weighted = reweighted(mu, g0)?;
    let h = auxiliary_sequence(&Exponentials::new(&weighted), horizon, &space_of(&weighted))?;
    let via_product: Vec<CVector> = h.vectors().iter().map(|hn| g0.component_mul(hn)).collect();
    let via_orbit = t.orbit(horizon);
    let discrepancy = relative_sequence_gap(&via_orbit, &via_product, &s);

    let exps: Vec<CVector> = (0..=horizon as i64).map(|n| exp_vector(mu, n)).collect();
    let mut residual = 0.0f64;
    for f in random_unit_vectors(&s, trials, seed) {
        let lf = s.lower(&f);
        let mut rec = CVector::zeros(f.len());
        for (g, e) in via_orbit.iter().zip(&exps) {
            rec.axpy(g.dotc(&lf), e, ONE);
        }
        residual = residual.max(s.norm(&(rec - &f)));
    }
    Ok(PropExistReport {
        horizon,
        seed,
        reweighted_masses: weighted.atoms().expect("atomic").iter().map(|a| a.1).collect(),
        discrepancy,
        reconstruction_residual: residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct S1Report {
    pub horizon: usize,
    /// `‖S_h 1 − g₀‖_μ`.
    pub s1_defect: f64,
    /// `‖S_h − M_{g₀}‖` when `g₀` is real and non-negative.
    pub multiplication_defect: Option<f64>,
    /// `|<S_h 1, 1> − 1|`.
    pub s1_pairing_defect: f64,
    /// `|<S_h^{-1} g₀, g₀> − 1|`.
    pub dual_pairing_defect: f64,
    pub recursion_defect: f64,
}

pub fn verify_s1_eq_g0(t: &OrbitOperator, horizon: usize) -> Result<S1Report> {
    let mu = match &t.construction {
        Construction::Mainsingular { mu } => mu,
        _ => {
            return Err(Error::Parameter {
                field: "T".into(),
                reason: "expected an operator built by build_mainsingular".into(),
            })
        }
    };
    let s = space_of(mu);
    let one = ones(mu);
    let s_h = frame_operator_of(&t.orbit(horizon), &s);
    let s1 = s_h.apply(&one)?;
    let s1_defect = s.norm(&(&s1 - &t.g0));
    let nonneg = t.g0.iter().all(|g| g.im.abs() <= 1e-12 && g.re >= 0.0);
    let multiplication_defect = if nonneg {
        let mg = multiplication_by(&t.g0, &s)?;
        Some(operator_norm(&s_h.sub(&mg)?))
    } else {
        None
    };
    let s1_pairing_defect = (s.inner(&s1, &one)? - ONE).norm();
    let sinv_g0 = s_h.inverse()?.apply(&t.g0)?;
    let dual_pairing_defect = (s.inner(&sinv_g0, &t.g0)? - ONE).norm();
    Ok(S1Report {
        horizon,
        s1_defect,
        multiplication_defect,
        s1_pairing_defect,
        dual_pairing_defect,
        recursion_defect: orbit_recursion_defect(t, horizon),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploratoryReport {
    /// Always `"exploratory"`: these seeds lie outside the proven form.
    pub label: String,
    pub horizon: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub tail_indicator: f64,
    pub s1_defect: f64,
    pub multiplication_defect: f64,
}

/// Probes the main singular form with a seed that may change sign or be
/// complex. Findings are labelled exploratory.
pub fn explore_mainsingular_seed(mu: &Measure, g0: &CVector, horizon: usize) -> Result<ExploratoryReport> {
    let t = build_mainsingular(mu, g0)?;
    let s = space_of(mu);
    let orbit = t.orbit(horizon);
    let r = frame_bounds(&t.frame_sequence(), horizon)?;
    let s_h = frame_operator_of(&orbit, &s);
    let s1 = s_h.apply(&ones(mu))?;
    let mg = multiplication_by(g0, &s)?;
    Ok(ExploratoryReport {
        label: "exploratory".into(),
        horizon,
        lower_bound: r.lower_bound,
        upper_bound: r.upper_bound,
        tail_indicator: r.tail_indicator,
        s1_defect: s.norm(&(s1 - g0)),
        multiplication_defect: operator_norm(&s_h.sub(&mg)?),
    })
}

/// `g₀` as a complex vector from real values.
pub fn seed_from_real(values: &[f64]) -> CVector {
    complexify(values)
}

/// Spectral radius of the orbit operator (governs the tail decay).
pub fn spectral_radius(t: &OrbitOperator) -> f64 {
    nalgebra::linalg::Schur::new(t.map.matrix().clone())
        .eigenvalues()
        .map(|ev| ev.iter().map(|z: &C64| z.norm()).fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

/// Vectors of a stream as a list (convenience for reports).
pub fn realize(stream: &dyn VectorStream, horizon: usize) -> Result<Vec<CVector>> {
    stream.take(horizon + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{max_abs_diff, ZERO};
    use crate::kaczmarz::Verdict;
    use crate::measures::cantor_iterate;
    use crate::sampling::{generic_atomic, rng, rotation_like};

    fn two_atom() -> Measure {
        Measure::atomic(vec![(0.0, 0.5), (0.5, 0.5)]).unwrap()
    }

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&complexify(values))
    }

    #[test]
    fn single_atom_shift_is_zero() {
        let nu = Measure::atomic(vec![(0.0, 1.0)]).unwrap();
        let l = build_singular_shift(&nu).unwrap();
        assert!(l.map().matrix()[(0, 0)].norm() < 1e-15);
        let orbit = l.orbit(3);
        assert_eq!(orbit[0][0], ONE);
        assert!(orbit[1..].iter().all(|v| v[0].norm() < 1e-15));
    }

    #[test]
    fn two_atom_shift() {
        let l = build_singular_shift(&two_atom()).unwrap();
        let orbit = l.orbit(2);
        assert!((&orbit[1] - complexify(&[1.0, -1.0])).norm() < 1e-15);
        assert!(orbit[2].norm() < 1e-15);
    }

    #[test]
    fn shift_requires_probability() {
        let nu = Measure::atomic(vec![(0.0, 0.4)]).unwrap();
        assert!(matches!(build_singular_shift(&nu), Err(Error::NotProbability { .. })));
        let g = Measure::grid_weight(vec![1.0]).unwrap();
        assert_eq!(build_singular_shift(&g).unwrap_err(), Error::NotAtomic);
    }

    #[test]
    fn shift_orbit_is_auxiliary_sequence() {
        let mut r = rng(3);
        for nu in [cantor_iterate(2).unwrap(), generic_atomic(5, &mut r).unwrap()] {
            let l = build_singular_shift(&nu).unwrap();
            let aux = auxiliary_sequence(&Exponentials::new(&nu), 200, &space_of(&nu)).unwrap();
            let gap = relative_sequence_gap(aux.vectors(), &l.orbit(200), l.space());
            assert!(gap <= 1e-10, "gap {gap}");
        }
    }

    #[test]
    fn defining_identities() {
        let mut r = rng(9);
        let nu = generic_atomic(4, &mut r).unwrap();
        assert!(build_singular_shift(&nu).unwrap().defining_identity_defect() <= 1e-12);
        let h = Space::euclidean(4).unwrap();
        let v = crate::sampling::random_invertible(&h, &space_of(&nu), 50.0, &mut r);
        let b = build_perturbed_conjugate(&v, &nu).unwrap();
        assert!(b.t.defining_identity_defect() <= 1e-12);
        let g0 = crate::sampling::admissible_g0(&nu, &mut r);
        assert!(build_mainsingular(&nu, &g0).unwrap().defining_identity_defect() <= 1e-12);
    }

    #[test]
    fn identity_v_degenerates_to_shift() {
        let nu = cantor_iterate(2).unwrap();
        let id = LinearMap::identity(&space_of(&nu));
        let b = build_perturbed_conjugate(&id, &nu).unwrap();
        let l = build_singular_shift(&nu).unwrap();
        assert!(max_abs_diff(b.t.map().matrix(), l.map().matrix()) < 1e-14);
        assert!(max_abs_diff(b.s.matrix(), id.matrix()) < 1e-14);
        assert!(max_abs_diff(b.u.matrix(), id.matrix()) < 1e-14);
    }

    #[test]
    fn diagonal_v_frame_bounds() {
        let nu = two_atom();
        let v = v_on_l2(diag(&[1.0, 2.0]), &nu).unwrap();
        let b = build_perturbed_conjugate(&v, &nu).unwrap();
        assert!(max_abs_diff(b.s.matrix(), &diag(&[1.0, 0.25])) < 1e-15);
        let r = frame_bounds(&b.t.frame_sequence(), 8).unwrap();
        assert!((r.lower_bound - 0.25).abs() < 1e-14 && (r.upper_bound - 1.0).abs() < 1e-14);
        assert!(r.classification.frame && !r.classification.parseval);
    }

    #[test]
    fn euclidean_domain_uses_metric_adjoint() {
        // V : C² → L²(ν) with masses ½: (V⁻¹)* = 2 V⁻ᴴ, so S = 2 V⁻¹V⁻ᴴ.
        let nu = two_atom();
        let v = LinearMap::new(diag(&[1.0, 2.0]), Space::euclidean(2).unwrap(), space_of(&nu)).unwrap();
        let b = build_perturbed_conjugate(&v, &nu).unwrap();
        assert!(max_abs_diff(b.s.matrix(), &diag(&[2.0, 0.5])) < 1e-14);
        let r = frame_bounds(&b.t.frame_sequence(), 8).unwrap();
        assert!((r.lower_bound - 0.5).abs() < 1e-14 && (r.upper_bound - 2.0).abs() < 1e-14);
        assert!(b.unitarity_defect() < 1e-14);
    }

    #[test]
    fn singular_v_rejected() {
        let nu = two_atom();
        let v = v_on_l2(CMatrix::from_element(2, 2, ONE), &nu).unwrap();
        assert!(matches!(build_perturbed_conjugate(&v, &nu), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn mainsingular_examples() {
        let nu = two_atom();
        let t = build_mainsingular(&nu, &ones(&nu)).unwrap();
        let l = build_singular_shift(&nu).unwrap();
        assert!(max_abs_diff(t.map().matrix(), l.map().matrix()) < 1e-15);
        assert!(build_mainsingular(&nu, &complexify(&[0.5, 1.5])).is_ok());
        assert!(matches!(
            build_mainsingular(&nu, &complexify(&[2.0, 2.0])),
            Err(Error::InvalidSeed(_))
        ));
    }

    #[test]
    fn prop_exist_examples() {
        let nu = two_atom();
        let r = verify_prop_exist(&nu, &ones(&nu), 50, 4, 1).unwrap();
        assert!(r.discrepancy <= 1e-12);
        let r = verify_prop_exist(&nu, &complexify(&[0.5, 1.5]), 50, 4, 1).unwrap();
        assert_eq!(r.reweighted_masses, vec![0.25, 0.75]);
        assert!(r.discrepancy <= 1e-10 && r.reconstruction_residual <= 1e-12);
        assert!(matches!(
            verify_prop_exist(&nu, &complexify(&[-1.0, 3.0]), 10, 1, 1),
            Err(Error::InvalidSeed(_))
        ));
    }

    #[test]
    fn prop_exist_cantor_decay() {
        // Spectral radius ≈ 0.973 on the level-3 iterate: horizon 200 leaves a
        // residual of order 1e-3, horizon 600 reaches 1e-6.
        let mu = cantor_iterate(3).unwrap();
        let at = |h| verify_prop_exist(&mu, &ones(&mu), h, 4, 2).unwrap();
        let short = at(200);
        assert!(short.reconstruction_residual > 1e-6 && short.reconstruction_residual < 1e-2);
        let long = at(600);
        assert!(long.reconstruction_residual <= 1e-6, "{}", long.reconstruction_residual);
        assert!(long.discrepancy <= 1e-10);
    }

    #[test]
    fn s1_examples() {
        let nu = cantor_iterate(2).unwrap();
        let r = verify_s1_eq_g0(&build_mainsingular(&nu, &ones(&nu)).unwrap(), 400).unwrap();
        assert!(r.s1_defect <= 1e-8 && r.multiplication_defect.unwrap() <= 1e-8);
        let two = two_atom();
        let t = build_mainsingular(&two, &complexify(&[0.5, 1.5])).unwrap();
        let r = verify_s1_eq_g0(&t, 200).unwrap();
        assert!(r.s1_defect <= 1e-8, "{}", r.s1_defect);
        assert!(r.s1_pairing_defect <= 1e-9 && r.dual_pairing_defect <= 1e-9);
        assert!(r.multiplication_defect.unwrap() <= 1e-8);
        let l = build_singular_shift(&two).unwrap();
        assert!(verify_s1_eq_g0(&l, 10).is_err());
    }

    #[test]
    fn genbackward_examples() {
        let nu = two_atom();
        for v in [CMatrix::identity(2, 2), diag(&[1.0, 2.0])] {
            let b = build_perturbed_conjugate(&v_on_l2(v, &nu).unwrap(), &nu).unwrap();
            let r = verify_genbackward(&b, 20, 4, 1e-10, 5).unwrap();
            assert!(r.agreement <= 1e-10 && r.unitarity_defect <= 1e-10);
            assert_eq!(r.pair_effectiveness.verdict, Verdict::EffectiveWithinTolerance);
        }
        let mut r = rng(21);
        let nu = generic_atomic(4, &mut r).unwrap();
        let v = crate::sampling::random_invertible(&space_of(&nu), &space_of(&nu), 30.0, &mut r);
        let b = build_perturbed_conjugate(&v, &nu).unwrap();
        let rep = verify_genbackward(&b, 300, 4, 1e-6, 5).unwrap();
        assert!(rep.agreement <= 1e-8, "{}", rep.agreement);
    }

    #[test]
    fn kaczmarzclass_examples() {
        let nu = two_atom();
        let cases = [
            (CMatrix::identity(2, 2), true),
            (diag(&[1.0, 2.0]), true),
            (rotation_like(std::f64::consts::PI / 5.0), false),
        ];
        for (v, unitary) in cases {
            let b = build_perturbed_conjugate(&v_on_l2(v, &nu).unwrap(), &nu).unwrap();
            let r = verify_kaczmarzclass(&b, 16).unwrap();
            assert!(r.parseval_defect <= 1e-12 && r.aux_agreement <= 1e-12);
            assert_eq!(r.unitary, unitary);
            assert!(r.equivalence_agrees);
            if !unitary {
                assert!(r.unitarity_defect > 0.1 && r.commutator_norm > 0.1);
            }
        }
    }

    #[test]
    fn pure_rotation_keeps_conjugate_unitary() {
        let nu = two_atom();
        let (s, c) = (0.3f64.sin(), 0.3f64.cos());
        let rot = CMatrix::from_row_slice(2, 2, &complexify(&[c, -s, s, c]).as_slice().to_vec());
        let b = build_perturbed_conjugate(&v_on_l2(rot, &nu).unwrap(), &nu).unwrap();
        let r = verify_kaczmarzclass(&b, 8).unwrap();
        assert!(r.unitary && r.commutes);
    }

    #[test]
    fn dextrodual_growth_examples() {
        let delta = Measure::atomic(vec![(0.0, 1.0)]).unwrap();
        let b = build_perturbed_conjugate(&LinearMap::identity(&space_of(&delta)), &delta).unwrap();
        let (_, r) = dextrodual_orbit(&b, 100, 2, 1).unwrap();
        for &(m, b_orbit, b_fourier) in &r.growth_curve {
            assert_eq!(b_fourier, (m + 1) as f64);
            assert!((b_orbit - (m + 1) as f64).abs() < 1e-9);
        }
        let nu = two_atom();
        let b = build_perturbed_conjugate(&v_on_l2(diag(&[1.0, 2.0]), &nu).unwrap(), &nu).unwrap();
        let (dual, r) = dextrodual_orbit(&b, 100, 3, 1).unwrap();
        let (m, _, bf) = r.growth_curve[100];
        assert!((bf - (m / 2 + 1) as f64).abs() < 1e-9);
        assert!(r.route_gap <= 1e-10 && r.reconstruction_residual <= 1e-12);
        let fr = crate::frames::stabilized_bounds(&dual, 16, 512).unwrap().0;
        assert!(!fr.classification.bessel);
    }

    #[test]
    fn rank_one_structure() {
        let mut r = rng(4);
        let nu = generic_atomic(6, &mut r).unwrap();
        let v = crate::sampling::random_invertible(&space_of(&nu), &space_of(&nu), 50.0, &mut r);
        let b = build_perturbed_conjugate(&v, &nu).unwrap();
        assert!(rank_one_ratio(&b) <= 1e-10);
    }

    #[test]
    fn stabilization_and_recursion() {
        let mut r = rng(8);
        let nu = generic_atomic(3, &mut r).unwrap();
        let l = build_singular_shift(&nu).unwrap();
        let st = default_stabilization(&l);
        assert!(st.stable && st.horizon >= 64);
        assert!(orbit_recursion_defect(&l, st.horizon) <= 1e-6);
        assert!(spectral_radius(&l) < 1.0);
    }

    #[test]
    fn exploratory_label() {
        let nu = two_atom();
        let r = explore_mainsingular_seed(&nu, &complexify(&[-0.5, 2.5]), 50).unwrap();
        assert_eq!(r.label, "exploratory");
        assert!(r.lower_bound >= 0.0 && r.upper_bound >= r.lower_bound);
        let _ = ZERO;
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::sampling::{admissible_g0, generic_atomic, random_invertible, rng};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn u_is_unitary(seed in any::<u64>(), dim in 1usize..=8) {
            let mut r = rng(seed);
            let nu = generic_atomic(dim, &mut r).unwrap();
            let h = Space::euclidean(dim).unwrap();
            let v = random_invertible(&h, &space_of(&nu), 100.0, &mut r);
            let b = build_perturbed_conjugate(&v, &nu).unwrap();
            prop_assert!(b.unitarity_defect() <= 1e-10);
            let sq = b.s_half.compose(&b.s_half).unwrap();
            prop_assert!(operator_norm(&sq.sub(&b.s).unwrap()) <= 1e-10 * operator_norm(&b.s));
        }

        #[test]
        fn orbit_matches_auxiliary(seed in any::<u64>(), dim in 1usize..=8) {
            let mut r = rng(seed);
            let nu = generic_atomic(dim, &mut r).unwrap();
            let v = random_invertible(&space_of(&nu), &space_of(&nu), 100.0, &mut r);
            let b = build_perturbed_conjugate(&v, &nu).unwrap();
            let phi = b.phi_stream();
            let psi = b.psi_stream();
            let aux = dual_auxiliary_sequence(&phi, &psi, 200, &b.h).unwrap();
            prop_assert!(relative_sequence_gap(aux.vectors(), &b.t.orbit(200), &b.h) <= 1e-8);
            prop_assert!(rank_one_ratio(&b) <= 1e-10);
        }

        #[test]
        fn dual_pairing_of_seed(seed in any::<u64>(), dim in 2usize..=6) {
            let mut r = rng(seed);
            let mu = generic_atomic(dim, &mut r).unwrap();
            let g0 = admissible_g0(&mu, &mut r);
            let t = build_mainsingular(&mu, &g0).unwrap();
            let st = default_stabilization(&t);
            let rep = verify_s1_eq_g0(&t, st.horizon).unwrap();
            prop_assert!(rep.dual_pairing_defect <= 1e-9);
            prop_assert!(rep.recursion_defect <= 1e-6);
        }
    }
}
