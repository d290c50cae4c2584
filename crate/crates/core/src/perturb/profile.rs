//! Estimating admissible perturbation constants from sampled pairs.

use serde::{Deserialize, Serialize};

use super::frontier::{pareto_frontier, worst_slack, Constraint};
use crate::error::{Error, Result};
use crate::maps::MapHandle;
use crate::sampling::SamplerConfig;

/// Criterion for picking one point of the frontier.
///
/// Every objective is evaluated at the effective pair `(λ₁ + μb, λ₂)`, which
/// is `(λ₁, λ₂)` when `μ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `(1+λ₂)/(1−λ₁)`, the inverse Lipschitz factor.
    #[default]
    InverseFactor,
    /// `(1+λ₁)/(1−λ₂)`, the forward Lipschitz factor.
    ForwardFactor,
    /// `λ₁ + λ₂`
    Sum,
    /// `w1·λ₁ + w2·λ₂`
    Weighted { w1: f64, w2: f64 },
    /// `(1+λ₂)(1+λ₁)/((1−λ₂)(1−λ₁))`, the predicted frame-bound ratio up to `b/a`.
    FrameRatio,
}

impl ObjectiveSpec {
    pub fn value(&self, l1: f64, l2: f64) -> f64 {
        match *self {
            ObjectiveSpec::InverseFactor => (1.0 + l2) / (1.0 - l1),
            ObjectiveSpec::ForwardFactor => (1.0 + l1) / (1.0 - l2),
            ObjectiveSpec::Sum => l1 + l2,
            ObjectiveSpec::Weighted { w1, w2 } => w1 * l1 + w2 * l2,
            ObjectiveSpec::FrameRatio => {
                (1.0 + l2) * (1.0 + l1) / ((1.0 - l2) * (1.0 - l1))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let ObjectiveSpec::Weighted { w1, w2 } = *self {
            if !(w1.is_finite() && w2.is_finite() && w1 >= 0.0 && w2 >= 0.0 && w1 + w2 > 0.0) {
                return Err(Error::domain(
                    "objective weights",
                    format!("({w1}, {w2}) must be nonnegative, finite and not both zero"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationProfile {
    pub lambda1: f64,
    /// In `[0, 1)`, or exactly `1` (see [`PerturbationProfile::lambda2_is_one`]).
    pub lambda2: f64,
    pub mu: f64,
    pub frontier: Vec<[f64; 2]>,
    pub sample_seed: u64,
    pub pair_count: usize,
    /// Objective value at the chosen point, when chosen by an estimate.
    pub objective_value: Option<f64>,
}

impl PerturbationProfile {
    /// User-supplied constants, not estimated from data.
    pub fn from_constants(lambda1: f64, lambda2: f64, mu: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda1) {
            return Err(Error::domain("lambda1", format!("{lambda1} is outside [0, 1)")));
        }
        if !(0.0..=1.0).contains(&lambda2) {
            return Err(Error::domain("lambda2", format!("{lambda2} is outside [0, 1]")));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::domain("mu", format!("{mu} must be finite and ≥ 0")));
        }
        Ok(PerturbationProfile {
            lambda1,
            lambda2,
            mu,
            frontier: vec![[lambda1, lambda2]],
            sample_seed: 0,
            pair_count: 0,
            objective_value: None,
        })
    }

    pub fn lambda2_is_one(&self) -> bool {
        self.lambda2 == 1.0
    }
}

/// Per-pair norms `s = ‖ΔS‖`, `t = ‖ΔT‖`, `c = ‖Δx‖`, `r = ‖ΔT − ΔS‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairData {
    pub s: f64,
    pub t: f64,
    pub c: f64,
    pub r: f64,
}

pub fn pair_data(s_map: &MapHandle, t_map: &MapHandle, sampler: &SamplerConfig) -> Result<Vec<PairData>> {
    if s_map.domain().dim() != t_map.domain().dim() || s_map.codomain().dim() != t_map.codomain().dim() {
        return Err(Error::DimensionMismatch {
            expected: s_map.domain().dim(),
            found: t_map.domain().dim(),
        });
    }
    let points = sampler.points(s_map.domain())?;
    let distinct = points.windows(2).any(|w| w[0] != w[1]);
    if points.len() < 2 || !distinct {
        return Err(Error::DegenerateSample(format!(
            "need at least two distinct points, sampler produced {}",
            points.len()
        )));
    }
    let sv = points.iter().map(|p| s_map.evaluate(p)).collect::<Result<Vec<_>>>()?;
    let tv = points.iter().map(|p| t_map.evaluate(p)).collect::<Result<Vec<_>>>()?;
    let cod = s_map.codomain();
    let dom = s_map.domain();
    let mut ds = vec![0.0; cod.dim()];
    let mut dt = vec![0.0; cod.dim()];
    let mut dx = vec![0.0; dom.dim()];
    sampler
        .pairs(points.len())
        .into_iter()
        .map(|(i, j)| {
            diff_into(&mut ds, &sv[i], &sv[j]);
            diff_into(&mut dt, &tv[i], &tv[j]);
            diff_into(&mut dx, &points[i], &points[j]);
            let s = cod.norm(&ds)?;
            let t = cod.norm(&dt)?;
            for (a, b) in dt.iter_mut().zip(&ds) {
                *a -= b;
            }
            Ok(PairData {
                s,
                t,
                c: dom.norm(&dx)?,
                r: cod.norm(&dt)?,
            })
        })
        .collect()
}

fn diff_into(out: &mut [f64], u: &[f64], v: &[f64]) {
    for ((o, a), b) in out.iter_mut().zip(u).zip(v) {
        *o = a - b;
    }
}

/// Constraints `s·λ₁ + t·λ₂ ≥ max(r − μc, 0)`.
pub fn constraints_for_mu(pairs: &[PairData], mu: f64) -> Vec<Constraint> {
    pairs
        .iter()
        .map(|p| Constraint::new(p.s, p.t, (p.r - mu * p.c).max(0.0)))
        .collect()
}

pub fn estimate_profile(
    s_map: &MapHandle,
    t_map: &MapHandle,
    sampler: &SamplerConfig,
    objective: ObjectiveSpec,
) -> Result<PerturbationProfile> {
    let pairs = pair_data(s_map, t_map, sampler)?;
    profile_from_pairs(&pairs, 0.0, 0.0, objective, sampler.seed)
}

/// Three-constant variant: the `μ` of `mu_grid` whose best frontier point
/// minimizes the objective at `(λ₁ + μ·upper_bound, λ₂)` is kept.
pub fn estimate_profile_mu(
    s_map: &MapHandle,
    t_map: &MapHandle,
    sampler: &SamplerConfig,
    mu_grid: &[f64],
    upper_bound: f64,
    objective: ObjectiveSpec,
) -> Result<PerturbationProfile> {
    if mu_grid.is_empty() {
        return Err(Error::domain("mu_grid", "is empty"));
    }
    if let Some(bad) = mu_grid.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::domain("mu_grid", format!("entry {bad} must be finite and ≥ 0")));
    }
    if !(upper_bound.is_finite() && upper_bound > 0.0) {
        return Err(Error::domain("upper_bound", format!("{upper_bound} must be positive")));
    }
    let pairs = pair_data(s_map, t_map, sampler)?;
    let mut best: Option<PerturbationProfile> = None;
    let mut last_err = None;
    for &mu in mu_grid {
        match profile_from_pairs(&pairs, mu, upper_bound, objective, sampler.seed) {
            Ok(p) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| p.objective_value < b.objective_value);
                if better {
                    best = Some(p);
                }
            }
            Err(e @ Error::NotVerifiable(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.expect("grid nonempty"))
}

/// Chooses the frontier point minimizing `objective(λ₁ + μb, λ₂)` over the
/// open box `λ₁ + μb < 1`, `λ₂ < 1`.
pub fn profile_from_pairs(
    pairs: &[PairData],
    mu: f64,
    upper_bound: f64,
    objective: ObjectiveSpec,
    seed: u64,
) -> Result<PerturbationProfile> {
    objective.validate()?;
    let constraints = constraints_for_mu(pairs, mu);
    let frontier = pareto_frontier(&constraints)?;
    let shift = mu * upper_bound;
    let (l1, l2, value) = minimize_on_frontier(&frontier, shift, objective).ok_or_else(|| {
        Error::NotVerifiable(format!(
            "no admissible constants with λ₁ + μb < 1 and λ₂ < 1 at μ = {mu}; frontier {:?}",
            frontier
        ))
    })?;
    // Rounding in the vertex arithmetic is absorbed by nudging λ₂ upward.
    let slack = worst_slack(&constraints, l1, l2);
    let min_t = constraints
        .iter()
        .filter(|c| c.slack(l1, l2) < 0.0)
        .map(|c| c.t)
        .fold(f64::INFINITY, f64::min);
    let l2 = if slack < 0.0 && min_t.is_finite() && min_t > 0.0 {
        l2 + (-slack / min_t) * (1.0 + 1e-12)
    } else {
        l2
    };
    if !(l1 + shift < 1.0 && l2 < 1.0) {
        return Err(Error::NotVerifiable(format!(
            "chosen constants ({l1}, {l2}) leave the admissible box"
        )));
    }
    Ok(PerturbationProfile {
        lambda1: l1,
        lambda2: l2,
        mu,
        frontier,
        sample_seed: seed,
        pair_count: pairs.len(),
        objective_value: Some(value),
    })
}

const CAP_MARGIN: f64 = 1e-9;

/// Minimizes over the frontier polyline clipped to `λ₁ ≤ 1 − shift − η`,
/// `λ₂ ≤ 1 − η`. Objectives are quasiconvex along segments, so endpoints plus
/// a ternary search per segment find the minimum.
fn minimize_on_frontier(
    frontier: &[[f64; 2]],
    shift: f64,
    objective: ObjectiveSpec,
) -> Option<(f64, f64, f64)> {
    let cap1 = 1.0 - shift - CAP_MARGIN;
    let cap2 = 1.0 - CAP_MARGIN;
    let f = |p: [f64; 2]| objective.value(p[0] + shift, p[1]);
    let inside = |p: [f64; 2]| p[0] <= cap1 && p[1] <= cap2;
    let mut best: Option<([f64; 2], f64)> = None;
    let mut offer = |p: [f64; 2]| {
        let v = f(p);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((p, v));
        }
    };
    for &v in frontier {
        if inside(v) {
            offer(v);
        }
    }
    for w in frontier.windows(2) {
        let (p, q) = (w[0], w[1]);
        let at = |s: f64| [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
        // λ₁ rises and λ₂ falls along the segment
        let s_hi = if q[0] > cap1 { (cap1 - p[0]) / (q[0] - p[0]) } else { 1.0 };
        let s_lo = if p[1] > cap2 { (p[1] - cap2) / (p[1] - q[1]) } else { 0.0 };
        if !(s_lo <= s_hi && s_hi >= 0.0 && s_lo <= 1.0) {
            continue;
        }
        let (mut lo, mut hi) = (s_lo.max(0.0), s_hi.min(1.0));
        offer(at(lo));
        offer(at(hi));
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(at(m1)) <= f(at(m2)) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        offer(at(0.5 * (lo + hi)));
    }
    best.map(|(p, v)| (p[0], p[1], v))
}

/// Smallest normalized slack `(λ₁s + λ₂t + μc − r)/max(1, s, t, r)` over the
/// sample; negative means the profile is contradicted by the data.
pub fn validate_profile(
    s_map: &MapHandle,
    t_map: &MapHandle,
    profile: &PerturbationProfile,
    sampler: &SamplerConfig,
) -> Result<f64> {
    let pairs = pair_data(s_map, t_map, sampler)?;
    Ok(pairs
        .iter()
        .map(|p| {
            let slack = profile.lambda1 * p.s + profile.lambda2 * p.t + profile.mu * p.c - p.r;
            slack / p.s.max(p.t).max(p.r).max(1.0)
        })
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::spaces::NormedSpace;

    fn pair(s: f64, t: f64, c: f64, r: f64) -> PairData {
        PairData { s, t, c, r }
    }

    /// Grid oracle: minimize the objective over points of the segment `λ₁+λ₂ = 0.3`.
    #[test]
    fn single_pair_winner_matches_grid_search() {
        let p = profile_from_pairs(&[pair(1.0, 1.0, 1.0, 0.3)], 0.0, 0.0, ObjectiveSpec::default(), 0).unwrap();
        let mut oracle = (f64::INFINITY, 0.0);
        for k in 0..=3000 {
            let l1 = k as f64 * 1e-4;
            let v = (1.0 + (0.3 - l1)) / (1.0 - l1);
            if v < oracle.0 {
                oracle = (v, l1);
            }
        }
        assert!((p.lambda1 - oracle.1).abs() < 1e-4);
        assert!((p.objective_value.unwrap() - oracle.0).abs() < 1e-12);
        assert_eq!((p.lambda1, p.lambda2), (0.0, 0.3));
    }

    #[test]
    fn alternative_objectives() {
        let pairs = [pair(1.0, 1.0, 1.0, 0.3)];
        let fwd = profile_from_pairs(&pairs, 0.0, 0.0, ObjectiveSpec::ForwardFactor, 0).unwrap();
        assert!((fwd.lambda1 - 0.3).abs() < 1e-15 && fwd.lambda2.abs() < 1e-15);
        let w = profile_from_pairs(&pairs, 0.0, 0.0, ObjectiveSpec::Weighted { w1: 1.0, w2: 2.0 }, 0).unwrap();
        assert!((w.lambda1 - 0.3).abs() < 1e-15);
        assert!(profile_from_pairs(&pairs, 0.0, 0.0, ObjectiveSpec::Weighted { w1: 0.0, w2: 0.0 }, 0).is_err());
    }

    #[test]
    fn mu_reduces_right_hand_side() {
        let c = constraints_for_mu(&[pair(1.0, 1.0, 2.0, 0.5)], 0.1);
        assert!((c[0].r - 0.3).abs() < 1e-15);
        let c = constraints_for_mu(&[pair(1.0, 1.0, 2.0, 0.5)], 1.0);
        assert_eq!(c[0].r, 0.0);
    }

    #[test]
    fn infeasible_box_is_not_verifiable() {
        // λ₁ + λ₂ ≥ 3 cannot meet λ₁, λ₂ < 1
        let r = profile_from_pairs(&[pair(1.0, 1.0, 1.0, 3.0)], 0.0, 0.0, ObjectiveSpec::default(), 0);
        assert!(matches!(r, Err(Error::NotVerifiable(_))));
    }

    #[test]
    fn equal_maps_and_mu_grid_reduction() {
        let e = NormedSpace::euclidean(2);
        let s = MapHandle::linear(e.clone(), e.clone(), Matrix::diagonal(&[1.0, 2.0])).unwrap();
        let sampler = SamplerConfig::new(12, 5);
        let p = estimate_profile(&s, &s, &sampler, ObjectiveSpec::default()).unwrap();
        assert_eq!((p.lambda1, p.lambda2), (0.0, 0.0));
        assert_eq!(p.frontier, vec![[0.0, 0.0]]);

        let t = MapHandle::linear(e.clone(), e, Matrix::diagonal(&[1.1, 1.9])).unwrap();
        let base = estimate_profile(&s, &t, &sampler, ObjectiveSpec::default()).unwrap();
        let mu0 = estimate_profile_mu(&s, &t, &sampler, &[0.0], 1.0, ObjectiveSpec::default()).unwrap();
        assert_eq!(base, mu0);
        let big = estimate_profile_mu(&s, &t, &sampler, &[10.0], 1e-3, ObjectiveSpec::default()).unwrap();
        assert_eq!((big.lambda1, big.lambda2), (0.0, 0.0));
        assert!(validate_profile(&s, &t, &base, &sampler).unwrap() >= -1e-12);
    }

    #[test]
    fn from_constants_validates() {
        assert!(PerturbationProfile::from_constants(1.0, 0.0, 0.0).is_err());
        assert!(PerturbationProfile::from_constants(0.0, 1.0, 0.0).unwrap().lambda2_is_one());
        assert!(PerturbationProfile::from_constants(0.0, 1.1, 0.0).is_err());
        assert!(PerturbationProfile::from_constants(0.0, 0.0, -1.0).is_err());
    }
}
