//! Sampled check of invertibility of `αS − T` along a grid of `α`.

use serde::{Deserialize, Serialize};

use super::profile::PerturbationProfile;
use crate::linalg::{Matrix, DEFAULT_PIVOT_THRESHOLD};
use crate::maps::{lip_estimate, MapHandle};
use crate::sampling::SamplerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub alpha: f64,
    /// `α < (1−λ₁)/(1+λ₂)`
    pub guaranteed: bool,
    /// On-sample minimum of `‖(αS−T)x − (αS−T)y‖/d(x,y)`.
    pub sample_min_ratio: Option<f64>,
    /// Numerical rank of `αA_S − A_T` for affine `S`, `T`.
    pub exact_rank: Option<usize>,
    /// Smallest singular value of `αA_S − A_T` for affine `S`, `T`.
    pub exact_min_singular: Option<f64>,
    /// Guaranteed but the affine check found a singular matrix.
    pub violation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub threshold: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub entries: Vec<ScanEntry>,
    pub violations: usize,
}

pub fn resolvent_scan(
    s_map: &MapHandle,
    t_map: &MapHandle,
    profile: &PerturbationProfile,
    alpha_grid: &[f64],
    sampler: &SamplerConfig,
) -> ScanReport {
    let threshold = (1.0 - profile.lambda1) / (1.0 + profile.lambda2);
    let affine = match (s_map.as_affine(), t_map.as_affine()) {
        (Some((a, _)), Some((b, _))) if a.is_square() && a.rows() == b.rows() && a.cols() == b.cols() => {
            Some((a.clone(), b.clone()))
        }
        _ => None,
    };
    let entries: Vec<ScanEntry> = alpha_grid
        .iter()
        .map(|&alpha| {
            let guaranteed = alpha < threshold;
            let mut note = None;
            let sample_min_ratio = MapHandle::combination(vec![(alpha, s_map.clone()), (-1.0, t_map.clone())])
                .and_then(|m| lip_estimate(&m, sampler))
                .map(|e| e.bilip_lower)
                .map_err(|e| note = Some(e.to_string()))
                .ok();
            let (exact_rank, exact_min_singular) = match &affine {
                Some((a_s, a_t)) => {
                    let m: Matrix = a_s.scaled(alpha).add_scaled(a_t, -1.0).expect("shapes checked");
                    (Some(m.rank(DEFAULT_PIVOT_THRESHOLD)), m.min_singular_value().ok())
                }
                None => (None, None),
            };
            let singular = exact_rank.is_some_and(|r| r < s_map.domain().dim());
            ScanEntry {
                alpha,
                guaranteed,
                sample_min_ratio,
                exact_rank,
                exact_min_singular,
                violation: guaranteed && singular,
                note,
            }
        })
        .collect();
    let violations = entries.iter().filter(|e| e.violation).count();
    ScanReport {
        threshold,
        lambda1: profile.lambda1,
        lambda2: profile.lambda2,
        entries,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::NormedSpace;

    #[test]
    fn identity_examples() {
        let e = NormedSpace::euclidean(2);
        let id = MapHandle::identity(&e);
        let p = PerturbationProfile::from_constants(0.0, 0.0, 0.0).unwrap();
        let r = resolvent_scan(&id, &id, &p, &[0.0, 0.5, 1.0], &SamplerConfig::new(10, 1));
        assert_eq!(r.threshold, 1.0);
        assert!(r.entries[0].guaranteed && r.entries[1].guaranteed && !r.entries[2].guaranteed);
        assert!((r.entries[0].sample_min_ratio.unwrap() - 1.0).abs() < 1e-15);
        assert!((r.entries[1].sample_min_ratio.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.entries[1].exact_rank, Some(2));
        assert_eq!(r.entries[2].exact_rank, Some(0));
        assert_eq!(r.violations, 0);
    }

    /// `T = I + 0.3·R(θ)`: singular values of `αI − A_T` from the closed form
    /// `|α − 1 − 0.3e^{iθ}|`, since `αI − A_T` is a scaled rotation.
    #[test]
    fn rotation_perturbation_against_closed_form() {
        let e = NormedSpace::euclidean(2);
        let th: f64 = 0.7;
        let a_t = Matrix::from_rows(&[
            vec![1.0 + 0.3 * th.cos(), -0.3 * th.sin()],
            vec![0.3 * th.sin(), 1.0 + 0.3 * th.cos()],
        ])
        .unwrap();
        let s = MapHandle::identity(&e);
        let t = MapHandle::linear(e.clone(), e, a_t).unwrap();
        // ‖ΔT − Δx‖ = 0.3‖Δx‖
        let p = PerturbationProfile::from_constants(0.3, 0.0, 0.0).unwrap();
        let grid: Vec<f64> = (-10..10).map(|k| k as f64 * 0.1).collect();
        let r = resolvent_scan(&s, &t, &p, &grid, &SamplerConfig::new(16, 2));
        assert!((r.threshold - 0.7).abs() < 1e-15);
        for en in &r.entries {
            let re = en.alpha - 1.0 - 0.3 * th.cos();
            let im = 0.3 * th.sin();
            let sigma = (re * re + im * im).sqrt();
            assert!((en.exact_min_singular.unwrap() - sigma).abs() < 1e-10 * sigma.max(1.0));
            assert!((en.sample_min_ratio.unwrap() - sigma).abs() < 1e-12);
        }
        assert_eq!(r.violations, 0);
    }
}
