//! Metric frames: analysis, bound estimation and stability under perturbation
//! of the synthesis map.

use serde::{Deserialize, Serialize};

use crate::atomic::AtomicDecomposition;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::maps::{InverseSpec, MapDescriptor, MapHandle};
use crate::perturb::{validate_profile, PerturbationProfile, ReferenceMap, SolverConfig};
use crate::sampling::SamplerConfig;
use crate::spaces::{NormedSpace, Vector};

/// Scalar functionals `fₙ` on `base` with a synthesis map `seq_space → base`.
#[derive(Debug, Clone)]
pub struct MetricFrame {
    base: NormedSpace,
    functionals: Vec<MapHandle>,
    seq_space: NormedSpace,
    synthesis: MapHandle,
    claimed_bounds: (f64, f64),
}

pub(crate) fn check_functionals(base: &NormedSpace, functionals: &[MapHandle], seq_space: &NormedSpace) -> Result<()> {
    if functionals.is_empty() {
        return Err(Error::Parse("a frame needs at least one functional".into()));
    }
    if functionals.len() > seq_space.dim() {
        return Err(Error::DimensionMismatch {
            expected: seq_space.dim(),
            found: functionals.len(),
        });
    }
    for f in functionals {
        if f.domain().dim() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: f.domain().dim(),
            });
        }
        if f.codomain().dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: f.codomain().dim(),
            });
        }
    }
    Ok(())
}

pub(crate) fn check_bounds(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a > 0.0 && a <= b) {
        return Err(Error::domain("claimed_bounds", format!("need 0 < a ≤ b, got ({a}, {b})")));
    }
    Ok(())
}

impl MetricFrame {
    pub fn new(
        base: NormedSpace,
        functionals: Vec<MapHandle>,
        seq_space: NormedSpace,
        synthesis: MapHandle,
        claimed_bounds: (f64, f64),
    ) -> Result<Self> {
        check_functionals(&base, &functionals, &seq_space)?;
        check_bounds(claimed_bounds.0, claimed_bounds.1)?;
        if synthesis.domain().dim() != seq_space.dim() || synthesis.codomain().dim() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: seq_space.dim(),
                found: synthesis.domain().dim(),
            });
        }
        Ok(MetricFrame {
            base,
            functionals,
            seq_space,
            synthesis,
            claimed_bounds,
        })
    }

    pub fn base(&self) -> &NormedSpace {
        &self.base
    }

    pub fn functionals(&self) -> &[MapHandle] {
        &self.functionals
    }

    pub fn seq_space(&self) -> &NormedSpace {
        &self.seq_space
    }

    pub fn synthesis(&self) -> &MapHandle {
        &self.synthesis
    }

    pub fn claimed_bounds(&self) -> (f64, f64) {
        self.claimed_bounds
    }

    /// `θ_f x = (f₁(x), …, f_N(x), 0, …)`.
    pub fn analysis(&self, x: &[f64]) -> Result<Vector> {
        analysis(&self.base, &self.functionals, &self.seq_space, x)
    }

    /// `θ_f` as a map handle.
    pub fn analysis_map(&self) -> Result<MapHandle> {
        MapHandle::stack(&self.base, &self.seq_space, self.functionals.clone())
    }

    pub fn descriptor(&self) -> Result<FrameDescriptor> {
        Ok(FrameDescriptor {
            base: self.base.clone(),
            functionals: self.functionals.iter().map(|f| f.descriptor()).collect::<Result<_>>()?,
            seq_space: self.seq_space.clone(),
            synthesis: self.synthesis.descriptor()?,
            claimed_bounds: [self.claimed_bounds.0, self.claimed_bounds.1],
        })
    }
}

pub(crate) fn analysis(
    base: &NormedSpace,
    functionals: &[MapHandle],
    seq_space: &NormedSpace,
    x: &[f64],
) -> Result<Vector> {
    base.check(x)?;
    let coeffs = functionals
        .iter()
        .map(|f| f.evaluate(x).map(|v| v[0]))
        .collect::<Result<Vec<_>>>()?;
    seq_space.seq_embed(&coeffs)
}

/// JSON form of a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDescriptor {
    pub base: NormedSpace,
    pub functionals: Vec<MapDescriptor>,
    pub seq_space: NormedSpace,
    pub synthesis: MapDescriptor,
    pub claimed_bounds: [f64; 2],
}

impl FrameDescriptor {
    pub fn build(&self) -> Result<MetricFrame> {
        MetricFrame::new(
            self.base.clone(),
            self.functionals.iter().map(MapDescriptor::build).collect::<Result<_>>()?,
            self.seq_space.clone(),
            self.synthesis.build()?,
            (self.claimed_bounds[0], self.claimed_bounds[1]),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBoundEstimate {
    pub a_emp: f64,
    pub b_emp: f64,
    pub reconstruction_max_error: f64,
    pub pair_count: usize,
}

/// On-sample extrema of `‖θx − θy‖/d(x,y)` and the worst `‖S(θx) − x‖`.
pub fn frame_bounds_estimate(frame: &MetricFrame, sampler: &SamplerConfig) -> Result<FrameBoundEstimate> {
    let points = sampler.points(&frame.base)?;
    let coeffs = points.iter().map(|p| frame.analysis(p)).collect::<Result<Vec<_>>>()?;
    let mut recon: f64 = 0.0;
    for (p, c) in points.iter().zip(&coeffs) {
        let back = frame.synthesis.evaluate(c)?;
        recon = recon.max(frame.base.distance(&back, p)?);
    }
    let (a, b, count) = ratio_extrema(&frame.base, &frame.seq_space, &points, &coeffs, sampler)?;
    Ok(FrameBoundEstimate {
        a_emp: a,
        b_emp: b,
        reconstruction_max_error: recon,
        pair_count: count,
    })
}

pub(crate) fn ratio_extrema(
    base: &NormedSpace,
    seq: &NormedSpace,
    points: &[Vector],
    coeffs: &[Vector],
    sampler: &SamplerConfig,
) -> Result<(f64, f64, usize)> {
    let (mut lo, mut hi, mut count) = (f64::INFINITY, 0.0f64, 0);
    for (i, j) in sampler.pairs(points.len()) {
        let d = base.distance(&points[i], &points[j])?;
        if d == 0.0 {
            continue;
        }
        let q = seq.distance(&coeffs[i], &coeffs[j])? / d;
        lo = lo.min(q);
        hi = hi.max(q);
        count += 1;
    }
    if count == 0 {
        return Err(Error::DegenerateSample("need at least two distinct points".into()));
    }
    Ok((lo, hi, count))
}

/// Result of perturbing the synthesis map of a frame.
#[derive(Debug, Clone)]
pub struct FramePerturbation {
    /// Frame `(gₙ, T)` with `gₙ = fₙ∘(Tθ_f)⁻¹`.
    pub frame: MetricFrame,
    /// `λ₁ + μb`, the first constant of `Tθ_f` against the identity.
    pub effective_lambda1: f64,
    pub lambda2: f64,
    /// Worst normalized slack of the supplied constants on the sample.
    pub profile_slack: f64,
    /// Worst `‖T(θ_g x) − x‖` over the sample.
    pub reconstruction_max_error: f64,
}

/// Tolerance on the normalized slack below which constants count as
/// contradicted by the sample.
pub const PROFILE_SLACK_TOLERANCE: f64 = 1e-12;

/// `(a(1−λ₂)/(1+λ₁+μb), b(1+λ₂)/(1−(λ₁+μb)))`
pub fn perturbed_bounds(a: f64, b: f64, lambda1: f64, lambda2: f64, mu: f64) -> Result<(f64, f64)> {
    check_bounds(a, b)?;
    let l1 = lambda1 + mu * b;
    if !(lambda2 < 1.0 && l1 < 1.0 && lambda1 >= 0.0 && lambda2 >= 0.0 && mu >= 0.0) {
        return Err(Error::domain(
            "max{λ₂, λ₁+μb}",
            format!("max{{{lambda2}, {l1}}} must be < 1 with nonnegative constants"),
        ));
    }
    Ok((a * (1.0 - lambda2) / (1.0 + l1), b * (1.0 + lambda2) / (1.0 - l1)))
}

/// Replaces the synthesis map by `T` and builds the functionals that make
/// `(gₙ, T)` a frame with the predicted bounds.
pub fn perturb_frame(
    frame: &MetricFrame,
    t_map: &MapHandle,
    profile: &PerturbationProfile,
    sampler: &SamplerConfig,
    solver: &SolverConfig,
) -> Result<FramePerturbation> {
    let (a, b) = frame.claimed_bounds;
    let bounds = perturbed_bounds(a, b, profile.lambda1, profile.lambda2, profile.mu)?;
    let slack = validate_profile(&frame.synthesis, t_map, profile, sampler)?;
    if slack < -PROFILE_SLACK_TOLERANCE {
        return Err(Error::Precondition(format!(
            "constants (λ₁, λ₂, μ) = ({}, {}, {}) are violated on the sample (slack {slack:e})",
            profile.lambda1, profile.lambda2, profile.mu
        )));
    }
    let theta = frame.analysis_map()?;
    let t_theta = theta.then(t_map)?;
    let effective = profile.lambda1 + profile.mu * b;
    let inverse = MapHandle::inverse_of(InverseSpec::new(
        t_theta,
        ReferenceMap::identity(&frame.base),
        effective,
        profile.lambda2,
        solver.clone(),
    ));
    let functionals = frame
        .functionals
        .iter()
        .map(|f| inverse.then(f))
        .collect::<Result<Vec<_>>>()?;
    let perturbed = MetricFrame::new(
        frame.base.clone(),
        functionals,
        frame.seq_space.clone(),
        t_map.clone(),
        bounds,
    )?;
    let mut recon: f64 = 0.0;
    for x in sampler.reseeded(1).points(&frame.base)? {
        let back = t_map.evaluate(&perturbed.analysis(&x)?)?;
        recon = recon.max(frame.base.distance(&back, &x)?);
    }
    if recon > solver.target_residual {
        return Err(Error::NotVerifiable(format!(
            "reconstruction error {recon:e} exceeds solver target {:e}",
            solver.target_residual
        )));
    }
    Ok(FramePerturbation {
        frame: perturbed,
        effective_lambda1: effective,
        lambda2: profile.lambda2,
        profile_slack: slack,
        reconstruction_max_error: recon,
    })
}

/// Frame with linear synthesis `S(Σ aₙeₙ) = Σ aₙτₙ`.
pub fn frame_from_atomic(dec: &AtomicDecomposition) -> Result<MetricFrame> {
    let base = dec.base().clone();
    let seq = dec.seq_space().clone();
    let mut matrix = Matrix::zeros(base.dim(), seq.dim());
    for (n, tau) in dec.atoms().iter().enumerate() {
        for (i, v) in tau.iter().enumerate() {
            matrix[(i, n)] = *v;
        }
    }
    let synthesis = MapHandle::linear(seq.clone(), base.clone(), matrix)?;
    MetricFrame::new(base, dec.functionals().to_vec(), seq, synthesis, dec.claimed_bounds())
}

/// Decomposition with `τₙ = S(eₙ)`; needs linear synthesis.
pub fn atomic_from_frame(frame: &MetricFrame) -> Result<AtomicDecomposition> {
    if !frame.synthesis.is_linear() {
        return Err(Error::Unsupported(
            "atoms τₙ = S(eₙ) need a linear synthesis map (affine with zero offset)".into(),
        ));
    }
    let atoms = (0..frame.functionals.len())
        .map(|n| frame.synthesis.evaluate(&frame.seq_space.basis_vector(n)))
        .collect::<Result<Vec<_>>>()?;
    AtomicDecomposition::new(
        frame.base.clone(),
        frame.functionals.clone(),
        atoms,
        frame.seq_space.clone(),
        frame.claimed_bounds,
    )
}
