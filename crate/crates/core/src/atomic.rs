//! Lipschitz atomic decompositions `x = Σ fₙ(x)τₙ`: checks, lifting, Schauder
//! tests, dilation onto a space with a basis, and perturbation of the atoms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{
    analysis, atomic_from_frame, check_bounds, check_functionals, frame_from_atomic, perturb_frame, ratio_extrema,
};
use crate::linalg::{Matrix, DEFAULT_PIVOT_THRESHOLD};
use crate::maps::{lip_exact_affine, MapDescriptor, MapHandle};
use crate::perturb::{PerturbationProfile, SolverConfig};
use crate::sampling::SamplerConfig;
use crate::spaces::{NormDescriptor, NormedSpace, PartialSumNorm, Vector};

#[derive(Debug, Clone)]
pub struct AtomicDecomposition {
    base: NormedSpace,
    functionals: Vec<MapHandle>,
    atoms: Vec<Vector>,
    seq_space: NormedSpace,
    claimed_bounds: (f64, f64),
}

impl AtomicDecomposition {
    pub fn new(
        base: NormedSpace,
        functionals: Vec<MapHandle>,
        atoms: Vec<Vector>,
        seq_space: NormedSpace,
        claimed_bounds: (f64, f64),
    ) -> Result<Self> {
        check_functionals(&base, &functionals, &seq_space)?;
        check_bounds(claimed_bounds.0, claimed_bounds.1)?;
        if atoms.len() != functionals.len() {
            return Err(Error::DimensionMismatch {
                expected: functionals.len(),
                found: atoms.len(),
            });
        }
        for a in &atoms {
            base.check(a)?;
        }
        Ok(AtomicDecomposition {
            base,
            functionals,
            atoms,
            seq_space,
            claimed_bounds,
        })
    }

    pub fn base(&self) -> &NormedSpace {
        &self.base
    }

    pub fn functionals(&self) -> &[MapHandle] {
        &self.functionals
    }

    pub fn atoms(&self) -> &[Vector] {
        &self.atoms
    }

    pub fn seq_space(&self) -> &NormedSpace {
        &self.seq_space
    }

    pub fn claimed_bounds(&self) -> (f64, f64) {
        self.claimed_bounds
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn coefficients(&self, x: &[f64]) -> Result<Vector> {
        analysis(&self.base, &self.functionals, &self.seq_space, x)
    }

    /// `Σ fₙ(x)τₙ`
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vector> {
        let c = self.coefficients(x)?;
        Ok(combine(&self.atoms, &c, self.base.dim()))
    }

    pub fn descriptor(&self) -> Result<DecompositionDescriptor> {
        Ok(DecompositionDescriptor {
            base: self.base.clone(),
            functionals: self.functionals.iter().map(|f| f.descriptor()).collect::<Result<_>>()?,
            atoms: self.atoms.iter().map(|a| a.coords().to_vec()).collect(),
            seq_space: self.seq_space.clone(),
            claimed_bounds: [self.claimed_bounds.0, self.claimed_bounds.1],
        })
    }
}

fn combine(atoms: &[Vector], coeffs: &[f64], dim: usize) -> Vector {
    let mut out = vec![0.0; dim];
    for (a, tau) in coeffs.iter().zip(atoms) {
        out.iter_mut().zip(tau.iter()).for_each(|(o, t)| *o += a * t);
    }
    Vector::from(out)
}

/// JSON form of a decomposition; atoms are coordinate arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionDescriptor {
    pub base: NormedSpace,
    pub functionals: Vec<MapDescriptor>,
    pub atoms: Vec<Vec<f64>>,
    pub seq_space: NormedSpace,
    pub claimed_bounds: [f64; 2],
}

impl DecompositionDescriptor {
    pub fn build(&self) -> Result<AtomicDecomposition> {
        AtomicDecomposition::new(
            self.base.clone(),
            self.functionals.iter().map(MapDescriptor::build).collect::<Result<_>>()?,
            self.atoms.iter().map(|a| Vector::new(a.clone())).collect::<Result<_>>()?,
            self.seq_space.clone(),
            (self.claimed_bounds[0], self.claimed_bounds[1]),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Finite sums always converge; recorded for completeness.
    pub series_converges: bool,
    pub max_coefficient_norm: f64,
    pub a_emp: f64,
    pub b_emp: f64,
    pub claimed_bounds: [f64; 2],
    pub bounds_ok: bool,
    pub reconstruction_max_error: f64,
    pub reconstruction_ok: bool,
    pub pair_count: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks reconstruction and the claimed two-sided bounds on a sample.
/// Bound checks use `tolerance` relative to `max(1, bound)`; reconstruction
/// uses `tolerance` relative to `max(1, ‖x‖)`.
pub fn check_decomposition(
    dec: &AtomicDecomposition,
    sampler: &SamplerConfig,
    tolerance: f64,
) -> Result<ValidationReport> {
    let points = sampler.points(&dec.base)?;
    let coeffs = points.iter().map(|p| dec.coefficients(p)).collect::<Result<Vec<_>>>()?;
    let mut max_coeff: f64 = 0.0;
    let mut recon: f64 = 0.0;
    let mut recon_ok = true;
    for (p, c) in points.iter().zip(&coeffs) {
        max_coeff = max_coeff.max(dec.seq_space.norm(c)?);
        let back = combine(&dec.atoms, c, dec.base.dim());
        let err = dec.base.distance(&back, p)?;
        recon = recon.max(err);
        recon_ok &= err <= tolerance * dec.base.norm(p)?.max(1.0);
    }
    let (a_emp, b_emp, pair_count) = ratio_extrema(&dec.base, &dec.seq_space, &points, &coeffs, sampler)?;
    let (a, b) = dec.claimed_bounds;
    let bounds_ok = a_emp >= a - tolerance * a.max(1.0) && b_emp <= b + tolerance * b.max(1.0);
    Ok(ValidationReport {
        series_converges: true,
        max_coefficient_norm: max_coeff,
        a_emp,
        b_emp,
        claimed_bounds: [a, b],
        bounds_ok,
        reconstruction_max_error: recon,
        reconstruction_ok: recon_ok,
        pair_count,
        tolerance,
        pass: bounds_ok && recon_ok,
    })
}

/// Constants of the lifting maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftConstants {
    /// Upper bound on `Lip(A)`.
    pub lip_a: f64,
    /// Operator norm of `B`; computed exactly when `None`.
    pub norm_b: Option<f64>,
}

/// Pulls a decomposition on `𝒴` back to `𝒳` through a bi-Lipschitz `A: 𝒳 → 𝒴`
/// with a linear left inverse `B`: functionals `gₙ∘A`, atoms `Bωₙ`, bounds
/// `(a/‖B‖, b·Lip(A))`.
pub fn lift_decomposition(
    dec: &AtomicDecomposition,
    a_map: &MapHandle,
    b_map: &MapHandle,
    constants: LiftConstants,
    sampler: &SamplerConfig,
) -> Result<AtomicDecomposition> {
    if !b_map.is_linear() {
        return Err(Error::Precondition("B must be linear (affine with zero offset)".into()));
    }
    if a_map.codomain().dim() != dec.base.dim() || b_map.domain().dim() != dec.base.dim() {
        return Err(Error::DimensionMismatch {
            expected: dec.base.dim(),
            found: a_map.codomain().dim(),
        });
    }
    if b_map.codomain().dim() != a_map.domain().dim() {
        return Err(Error::DimensionMismatch {
            expected: a_map.domain().dim(),
            found: b_map.codomain().dim(),
        });
    }
    let x_space = a_map.domain().clone();
    for x in sampler.points(&x_space)? {
        let back = b_map.evaluate(&a_map.evaluate(&x)?)?;
        let err = x_space.distance(&back, &x)?;
        if err > 1e-10 * x_space.norm(&x)?.max(1.0) {
            return Err(Error::Precondition(format!("B(A(x)) ≠ x on the sample (error {err:e})")));
        }
    }
    if !(constants.lip_a.is_finite() && constants.lip_a > 0.0) {
        return Err(Error::domain("lip_a", format!("{} must be positive", constants.lip_a)));
    }
    let norm_b = match constants.norm_b {
        Some(n) => n,
        None => lip_exact_affine(b_map)?,
    };
    if !(norm_b.is_finite() && norm_b > 0.0) {
        return Err(Error::domain("norm_b", format!("{norm_b} must be positive")));
    }
    let functionals = dec
        .functionals
        .iter()
        .map(|g| a_map.then(g))
        .collect::<Result<Vec<_>>>()?;
    let atoms = dec.atoms.iter().map(|w| b_map.evaluate(w)).collect::<Result<Vec<_>>>()?;
    let (a, b) = dec.claimed_bounds;
    AtomicDecomposition::new(x_space, functionals, atoms, dec.seq_space.clone(), (a / norm_b, b * constants.lip_a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchauderReport {
    pub pass: bool,
    pub zero_atoms: Vec<usize>,
    pub rank: usize,
    pub dim: usize,
    pub atom_count: usize,
    /// Sampled lower bound of the basis constant; at least 1.
    pub basis_constant_estimate: f64,
    pub reasons: Vec<String>,
}

/// Finite Schauder-basis test: nonzero atoms, `rank = dim = N`, and a sampled
/// estimate of `max ‖Σ_{k≤n} aₖτₖ‖ / ‖Σ_{k≤m} aₖτₖ‖` over `n < m`.
pub fn schauder_check(
    atoms: &[Vector],
    space: &NormedSpace,
    sampler: &SamplerConfig,
    pivot_threshold: f64,
) -> Result<SchauderReport> {
    if atoms.is_empty() {
        return Err(Error::domain("atoms", "need at least one atom"));
    }
    for a in atoms {
        space.check(a)?;
    }
    let zero_atoms: Vec<usize> = atoms
        .iter()
        .enumerate()
        .filter(|(_, a)| a.iter().all(|&v| v == 0.0))
        .map(|(i, _)| i)
        .collect();
    let cols: Vec<Vec<f64>> = atoms.iter().map(|a| a.coords().to_vec()).collect();
    let rank = Matrix::from_columns(&cols)?.rank(pivot_threshold);
    let (dim, n) = (space.dim(), atoms.len());
    let mut reasons = Vec::new();
    if !zero_atoms.is_empty() {
        reasons.push(format!("zero atoms at {zero_atoms:?}"));
    }
    if rank < dim {
        reasons.push(format!("atoms span a {rank}-dimensional subspace of a {dim}-dimensional space"));
    }
    if rank < n {
        reasons.push(format!("{n} atoms but rank {rank}: atoms are linearly dependent"));
    }
    let coeff_space = NormedSpace::euclidean(n);
    let mut constant: f64 = 1.0;
    for a in sampler.points(&coeff_space)? {
        let mut acc = vec![0.0; dim];
        let mut best_prefix: f64 = 0.0;
        for (ak, tau) in a.iter().zip(atoms) {
            acc.iter_mut().zip(tau.iter()).for_each(|(s, t)| *s += ak * t);
            let pm = space.norm(&acc)?;
            if pm > 0.0 {
                constant = constant.max(best_prefix / pm);
            }
            best_prefix = best_prefix.max(pm);
        }
    }
    Ok(SchauderReport {
        pass: reasons.is_empty(),
        zero_atoms,
        rank,
        dim,
        atom_count: n,
        basis_constant_estimate: constant,
        reasons,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationChecks {
    pub samples: usize,
    /// `max ‖P(Pz) − Pz‖`
    pub idempotence_error: f64,
    /// `max ‖Γ(θx) − x‖`
    pub left_inverse_error: f64,
    /// `max ‖Pωₙ − θτₙ‖` over nonzero atoms.
    pub basis_error: f64,
}

/// Embedding of a decomposition into a space `Z` with a basis.
///
/// Coordinates of `Z` list the nonzero atoms in their original order,
/// followed by one Euclidean coordinate per zero atom; the two blocks are
/// joined by the max norm.
#[derive(Debug, Clone)]
pub struct DilationResult {
    pub z: NormedSpace,
    pub theta: MapHandle,
    pub gamma: MapHandle,
    pub p: MapHandle,
    /// `ωₙ`, indexed like the original atoms.
    pub basis_vectors: Vec<Vector>,
    /// Indices `n` with `τₙ = 0`.
    pub zero_atoms: Vec<usize>,
    /// Zero-atom indices whose input functional was nonzero on the sample;
    /// those functionals are replaced by zero.
    pub nonzero_functionals_dropped: Vec<usize>,
    /// How the norms of the two summands of `Z` are combined.
    pub direct_sum_norm: &'static str,
    pub checks: DilationChecks,
}

/// The combination rule used for `Z = Z_J ⊕ ℓ²(J^c)`.
pub const DIRECT_SUM_NORM: &str = "max(partial-sum norm, l2 tail norm)";

/// Absolute tolerance for the dilation identities.
pub const DILATION_TOLERANCE: f64 = 1e-10;

pub fn dilate(dec: &AtomicDecomposition, sampler: &SamplerConfig) -> Result<DilationResult> {
    let n = dec.len();
    let (kept, zero): (Vec<usize>, Vec<usize>) = (0..n).partition(|&k| dec.atoms[k].iter().any(|&v| v != 0.0));
    if kept.is_empty() {
        return Err(Error::DegenerateNorm { witness: 0 });
    }
    let atoms_j: Vec<Vec<f64>> = kept.iter().map(|&k| dec.atoms[k].coords().to_vec()).collect();
    let ps = PartialSumNorm {
        atoms: atoms_j.clone(),
        ambient: dec.base.clone(),
        l2_tail: zero.len(),
    };
    let z = NormedSpace::new(n, NormDescriptor::PartialSum(Arc::new(ps)))?;
    for k in 0..kept.len() {
        if z.norm(&z.basis_vector(k))? == 0.0 {
            return Err(Error::DegenerateNorm { witness: kept[k] });
        }
    }

    let points = sampler.points(&dec.base)?;
    let mut dropped = Vec::new();
    for &k in &zero {
        for x in &points {
            if dec.functionals[k].evaluate(x)?[0] != 0.0 {
                dropped.push(k);
                break;
            }
        }
    }

    let theta = MapHandle::stack(
        &dec.base,
        &z,
        kept.iter().map(|&k| dec.functionals[k].clone()).collect(),
    )?;
    let mut g = Matrix::zeros(dec.base.dim(), n);
    for (col, atom) in atoms_j.iter().enumerate() {
        for (i, v) in atom.iter().enumerate() {
            g[(i, col)] = *v;
        }
    }
    let gamma = MapHandle::linear(z.clone(), dec.base.clone(), g)?;
    let p = gamma.then(&theta)?;

    let mut basis_vectors = vec![Vector::zeros(n); n];
    for (pos, &k) in kept.iter().chain(&zero).enumerate() {
        basis_vectors[k] = z.basis_vector(pos);
    }

    let mut checks = DilationChecks {
        samples: points.len(),
        idempotence_error: 0.0,
        left_inverse_error: 0.0,
        basis_error: 0.0,
    };
    for x in &points {
        let back = gamma.evaluate(&theta.evaluate(x)?)?;
        checks.left_inverse_error = checks.left_inverse_error.max(dec.base.distance(&back, x)?);
    }
    for zp in sampler.reseeded(2).points(&z)? {
        let pz = p.evaluate(&zp)?;
        let ppz = p.evaluate(&pz)?;
        checks.idempotence_error = checks.idempotence_error.max(max_abs_diff(&ppz, &pz));
    }
    for &k in &kept {
        let lhs = p.evaluate(&basis_vectors[k])?;
        let rhs = theta.evaluate(&dec.atoms[k])?;
        checks.basis_error = checks.basis_error.max(max_abs_diff(&lhs, &rhs));
    }
    let worst = checks
        .idempotence_error
        .max(checks.left_inverse_error)
        .max(checks.basis_error);
    if worst > DILATION_TOLERANCE {
        return Err(Error::NotVerifiable(format!("dilation identities fail: {checks:?}")));
    }
    Ok(DilationResult {
        z,
        theta,
        gamma,
        p,
        basis_vectors,
        zero_atoms: zero,
        nonzero_functionals_dropped: dropped,
        direct_sum_norm: DIRECT_SUM_NORM,
        checks,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct DecompositionPerturbation {
    /// `(gₙ, ωₙ)` with `gₙ = fₙ∘T⁻¹` and `T(x) = Σ fₙ(x)ωₙ`.
    pub decomposition: AtomicDecomposition,
    pub effective_lambda1: f64,
    pub lambda2: f64,
    pub profile_slack: f64,
    pub reconstruction_max_error: f64,
}

/// Replaces `τₙ` by `ωₙ`. The constants must satisfy
/// `‖Σ(cₙ−dₙ)(τₙ−ωₙ)‖ ≤ λ₁‖Σ(cₙ−dₙ)τₙ‖ + λ₂‖Σ(cₙ−dₙ)ωₙ‖ + μ‖c−d‖` on the sample.
pub fn perturb_decomposition(
    dec: &AtomicDecomposition,
    new_atoms: Vec<Vector>,
    profile: &PerturbationProfile,
    sampler: &SamplerConfig,
    solver: &SolverConfig,
) -> Result<DecompositionPerturbation> {
    if new_atoms.len() != dec.len() {
        return Err(Error::DimensionMismatch {
            expected: dec.len(),
            found: new_atoms.len(),
        });
    }
    for w in &new_atoms {
        dec.base.check(w)?;
    }
    let frame = frame_from_atomic(dec)?;
    let target = AtomicDecomposition::new(
        dec.base.clone(),
        dec.functionals.clone(),
        new_atoms,
        dec.seq_space.clone(),
        dec.claimed_bounds,
    )?;
    let t_synth = frame_from_atomic(&target)?.synthesis().clone();
    let out = perturb_frame(&frame, &t_synth, profile, sampler, solver)?;
    let decomposition = atomic_from_frame(&out.frame)?;
    Ok(DecompositionPerturbation {
        decomposition,
        effective_lambda1: out.effective_lambda1,
        lambda2: out.lambda2,
        profile_slack: out.profile_slack,
        reconstruction_max_error: out.reconstruction_max_error,
    })
}

/// Pivot threshold used by default in span checks.
pub const SPAN_PIVOT_THRESHOLD: f64 = DEFAULT_PIVOT_THRESHOLD;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Family;
    use crate::sampling::Scheme;

    fn e(n: usize) -> NormedSpace {
        NormedSpace::euclidean(n)
    }

    fn standard(n: usize) -> AtomicDecomposition {
        let fs = (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                MapHandle::functional(&e(n), &row, 0.0).unwrap()
            })
            .collect();
        let atoms = (0..n).map(|i| e(n).basis_vector(i)).collect();
        AtomicDecomposition::new(e(n), fs, atoms, e(n), (1.0, 1.0)).unwrap()
    }

    #[test]
    fn standard_basis_passes_exactly() {
        let r = check_decomposition(&standard(3), &SamplerConfig::new(15, 1), 1e-12).unwrap();
        assert!(r.pass);
        assert_eq!(r.reconstruction_max_error, 0.0);
    }

    #[test]
    fn compensating_scaling() {
        let d = standard(2);
        let fs = d.functionals().iter().map(|f| f.then(&MapHandle::scalar_multiple(&e(1), 0.5)).unwrap()).collect();
        let atoms = d.atoms().iter().map(|a| a.scaled(2.0)).collect();
        let scaled = AtomicDecomposition::new(e(2), fs, atoms, e(2), (0.5, 0.5)).unwrap();
        let r = check_decomposition(&scaled, &SamplerConfig::new(15, 1), 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.a_emp - 0.5).abs() < 1e-15 && (r.b_emp - 0.5).abs() < 1e-15);
    }

    /// Three atoms in ℝ² with least-squares duals `(ΘᵀΘ)⁻¹θₙ`.
    #[test]
    fn redundant_decomposition_with_least_squares_duals() {
        let atoms = [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let t = Matrix::from_rows(&atoms).unwrap(); // rows τₙ
        let gram_inv = t.transpose().matmul(&t).unwrap().inverse().unwrap();
        let fs = atoms
            .iter()
            .map(|a| MapHandle::functional(&e(2), &gram_inv.mul_vec(a).unwrap(), 0.0).unwrap())
            .collect();
        let dec = AtomicDecomposition::new(e(2), fs, atoms.iter().map(|a| Vector::new(a.clone()).unwrap()).collect(), e(3), (0.5, 1.0)).unwrap();
        let r = check_decomposition(&dec, &SamplerConfig::new(20, 3), 1e-12).unwrap();
        assert!(r.reconstruction_ok && r.reconstruction_max_error < 1e-15);
        // ratios are singular values of Θ(ΘᵀΘ)⁻¹: 1/√3 and 1
        assert!(r.a_emp >= 1.0 / 3f64.sqrt() - 1e-12 && r.b_emp <= 1.0 + 1e-12);
    }

    #[test]
    fn lift_examples() {
        let d = standard(2);
        let id = MapHandle::identity(&e(2));
        let s = SamplerConfig::new(10, 1);
        let same = lift_decomposition(&d, &id, &id, LiftConstants { lip_a: 1.0, norm_b: None }, &s).unwrap();
        assert_eq!(same.atoms(), d.atoms());

        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let a_map = MapHandle::linear(e(2), e(2), a.clone()).unwrap();
        let b_map = MapHandle::linear(e(2), e(2), a.inverse().unwrap()).unwrap();
        let lifted = lift_decomposition(&d, &a_map, &b_map, LiftConstants { lip_a: a.spectral_norm(), norm_b: None }, &s).unwrap();
        let ainv = a.inverse().unwrap();
        for (k, tau) in lifted.atoms().iter().enumerate() {
            assert_eq!(tau.coords(), ainv.column(k).as_slice());
        }
        assert!(check_decomposition(&lifted, &s, 1e-12).unwrap().pass);

        // x ↦ (x, φ(x)) into ℝ⁴ with B the first-block projection
        let phi = MapHandle::componentwise(&e(2), Family::Tanh { eps: 0.3, beta: 1.0 });
        let top = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let bot = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a_map = MapHandle::combination(vec![
            (1.0, MapHandle::linear(e(2), e(4), top.clone()).unwrap()),
            (1.0, phi.then(&MapHandle::linear(e(2), e(4), bot).unwrap()).unwrap()),
        ])
        .unwrap();
        let b_map = MapHandle::linear(e(4), e(2), top.transpose()).unwrap();
        let lip_a = (1.0f64 + 1.3 * 1.3).sqrt();
        let big = standard(4);
        let lifted = lift_decomposition(&big, &a_map, &b_map, LiftConstants { lip_a, norm_b: None }, &s).unwrap();
        assert_eq!(lifted.atoms()[2].coords(), &[0.0, 0.0]);
        assert!(check_decomposition(&lifted, &SamplerConfig::new(30, 5), 1e-12).unwrap().pass);

        let bad_b = MapHandle::scalar_multiple(&e(2), 2.0);
        assert!(matches!(
            lift_decomposition(&d, &id, &bad_b, LiftConstants { lip_a: 1.0, norm_b: None }, &s),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn schauder_examples() {
        let s = SamplerConfig::new(50, 2);
        let std2: Vec<Vector> = (0..2).map(|i| e(2).basis_vector(i)).collect();
        let r = schauder_check(&std2, &e(2), &s, SPAN_PIVOT_THRESHOLD).unwrap();
        assert!(r.pass && r.basis_constant_estimate == 1.0);

        let dup = vec![std2[0].clone(), std2[0].clone()];
        let r = schauder_check(&dup, &e(2), &s, SPAN_PIVOT_THRESHOLD).unwrap();
        assert!(!r.pass && r.rank == 1);

        let with_zero = vec![std2[0].clone(), Vector::zeros(2)];
        assert_eq!(schauder_check(&with_zero, &e(2), &s, SPAN_PIVOT_THRESHOLD).unwrap().zero_atoms, vec![1]);
    }

    /// Exhaustive enumeration over the same coefficient grid; the grid holds
    /// `a = (1, −1)`, where the ratio is exactly `1/ε`.
    #[test]
    fn near_dependent_pair_against_enumeration() {
        let eps = 0.05;
        let atoms = vec![Vector::new(vec![1.0, 0.0]).unwrap(), Vector::new(vec![1.0, eps]).unwrap()];
        let grid = SamplerConfig::new(121, 0).with_scheme(Scheme::Grid);
        let r = schauder_check(&atoms, &e(2), &grid, SPAN_PIVOT_THRESHOLD).unwrap();
        let mut oracle: f64 = 1.0;
        for i in 0..11 {
            for j in 0..11 {
                let (a1, a2) = (-1.0 + 0.2 * i as f64, -1.0 + 0.2 * j as f64);
                let p1 = a1.abs();
                let p2 = ((a1 + a2).powi(2) + (a2 * eps).powi(2)).sqrt();
                if p2 > 0.0 {
                    oracle = oracle.max(p1 / p2);
                }
            }
        }
        assert!((r.basis_constant_estimate - oracle).abs() <= 1e-12 * oracle);
        assert!((oracle - 1.0 / eps).abs() < 1e-9);
        assert!(r.pass);
    }

    #[test]
    fn dilation_of_standard_basis() {
        let d = standard(3);
        let s = SamplerConfig::new(100, 7);
        let res = dilate(&d, &s).unwrap();
        assert!(res.zero_atoms.is_empty());
        let v = [1.0, -2.0, 0.5];
        // max over partial sums in ℓ²: ‖(1,0,0)‖, ‖(1,−2,0)‖, ‖(1,−2,0.5)‖
        assert!((res.z.norm(&v).unwrap() - (1.0f64 + 4.0 + 0.25).sqrt()).abs() < 1e-15);
        assert_eq!(res.p.evaluate(&v).unwrap().coords(), &v);
    }

    #[test]
    fn dilation_routes_zero_atoms() {
        let base = standard(2);
        let extra = MapHandle::functional(&e(2), &[1.0, 1.0], 0.0).unwrap();
        let mut fs = base.functionals().to_vec();
        fs.insert(1, extra);
        let atoms = vec![e(2).basis_vector(0), Vector::zeros(2), e(2).basis_vector(1)];
        let d = AtomicDecomposition::new(e(2), fs, atoms, e(3), (1.0, 2.0)).unwrap();
        let res = dilate(&d, &SamplerConfig::new(100, 3)).unwrap();
        assert_eq!(res.zero_atoms, vec![1]);
        assert_eq!(res.nonzero_functionals_dropped, vec![1]);
        let rho = &res.basis_vectors[1];
        assert_eq!(rho.coords(), &[0.0, 0.0, 1.0]);
        assert_eq!(res.p.evaluate(rho).unwrap().coords(), &[0.0, 0.0, 0.0]);
    }

    /// Matrix of `P` in the e-basis is `ΘΓ`, whose rank the elimination oracle gives.
    #[test]
    fn redundant_dilation_rank() {
        let atoms = [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let t = Matrix::from_rows(&atoms).unwrap();
        let gram_inv = t.transpose().matmul(&t).unwrap().inverse().unwrap();
        let fs = atoms
            .iter()
            .map(|a| MapHandle::functional(&e(2), &gram_inv.mul_vec(a).unwrap(), 0.0).unwrap())
            .collect();
        let d = AtomicDecomposition::new(e(2), fs, atoms.iter().map(|a| Vector::new(a.clone()).unwrap()).collect(), e(3), (0.5, 1.0)).unwrap();
        let res = dilate(&d, &SamplerConfig::new(100, 1)).unwrap();
        let cols: Vec<Vec<f64>> = (0..3).map(|k| res.p.evaluate(&res.z.basis_vector(k)).unwrap().into_inner()).collect();
        assert_eq!(Matrix::from_columns(&cols).unwrap().rank(1e-10), 2);
    }

    #[test]
    fn perturb_with_scaled_atoms_matches_closed_form() {
        let d = standard(2);
        let delta = 0.05;
        let new_atoms = d.atoms().iter().map(|a| a.scaled(1.0 + delta)).collect();
        let p = PerturbationProfile::from_constants(delta, 0.0, 0.0).unwrap();
        let s = SamplerConfig::new(12, 4);
        let out = perturb_decomposition(&d, new_atoms, &p, &s, &SolverConfig { target_residual: 1e-13, ..Default::default() }).unwrap();
        for x in s.points(&e(2)).unwrap() {
            let g = out.decomposition.coefficients(&x).unwrap();
            for k in 0..2 {
                assert!((g[k] - x[k] / (1.0 + delta)).abs() < 1e-9);
            }
        }
        let (lo, hi) = out.decomposition.claimed_bounds();
        assert!((lo - 1.0 / 1.05).abs() < 1e-15 && (hi - 1.0 / 0.95).abs() < 1e-15);
        assert!(check_decomposition(&out.decomposition, &s.reseeded(5), 1e-9).unwrap().pass);

        let same = perturb_decomposition(&d, d.atoms().to_vec(), &PerturbationProfile::from_constants(0.0, 0.0, 0.0).unwrap(), &s, &SolverConfig::default()).unwrap();
        assert_eq!(same.decomposition.claimed_bounds(), (1.0, 1.0));
    }

    #[test]
    fn claimed_bound_formula() {
        let (lo, hi) = crate::frames::perturbed_bounds(1.0, 2.0, 0.1, 0.1, 0.05).unwrap();
        assert!((lo - 0.75).abs() < 1e-15 && (hi - 2.75).abs() < 1e-15);
    }
}
