//! Closed-form two-sided bounds for perturbed maps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which bound formula produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaId {
    /// Two-constant perturbation of an invertible reference map.
    TwoConstant,
    /// Symmetric single-constant perturbation of the identity.
    SymmetricIdentity,
    /// Two-constant bounds at ε-shifted effective constants.
    EpsilonShifted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lip_t_lower: f64,
    pub lip_t_upper: f64,
    pub lip_tinv_lower: f64,
    pub lip_tinv_upper: f64,
    /// `αS − T` is invertible for every `α` below this value.
    pub invertibility_threshold: f64,
    pub formula: FormulaId,
    pub inputs: BTreeMap<String, f64>,
}

fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(name))
    }
}

fn unit_interval(param: &'static str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(param, format!("{v} is outside [0, 1)")))
    }
}

fn positive(param: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(param, format!("{v} must be positive and finite")))
    }
}

/// Bounds for `T` satisfying
/// `‖ΔT − ΔS‖ ≤ λ₁‖ΔS‖ + λ₂‖ΔT‖` against an invertible `S`.
pub fn bounds_main(lambda1: f64, lambda2: f64, lip_s: f64, lip_sinv: f64) -> Result<BoundReport> {
    unit_interval("lambda1", lambda1)?;
    unit_interval("lambda2", lambda2)?;
    positive("lip_s", lip_s)?;
    positive("lip_sinv", lip_sinv)?;
    if lip_s * lip_sinv < 1.0 - 1e-9 {
        return Err(Error::domain(
            "lip_s·lip_sinv",
            format!("{} < 1 is impossible for an invertible map", lip_s * lip_sinv),
        ));
    }
    let inputs = BTreeMap::from([
        ("lambda1".to_string(), lambda1),
        ("lambda2".to_string(), lambda2),
        ("lip_s".to_string(), lip_s),
        ("lip_sinv".to_string(), lip_sinv),
    ]);
    Ok(BoundReport {
        lip_t_lower: finite("lip_t_lower", (1.0 - lambda1) / (1.0 + lambda2) * lip_s)?,
        lip_t_upper: finite("lip_t_upper", (1.0 + lambda1) / (1.0 - lambda2) * lip_s)?,
        lip_tinv_lower: finite("lip_tinv_lower", (1.0 - lambda2) / (1.0 + lambda1) / lip_s)?,
        lip_tinv_upper: finite("lip_tinv_upper", (1.0 + lambda2) / (1.0 - lambda1) * lip_sinv)?,
        invertibility_threshold: (1.0 - lambda1) / (1.0 + lambda2),
        formula: FormulaId::TwoConstant,
        inputs,
    })
}

/// `‖ΔT − Δx‖ ≤ λ(‖Δx‖ + ‖ΔT‖)`: bounds `(1−λ)/(1+λ)` and `(1+λ)/(1−λ)`.
pub fn bounds_hilding(lambda: f64) -> Result<BoundReport> {
    unit_interval("lambda", lambda)?;
    let mut r = bounds_main(lambda, lambda, 1.0, 1.0)?;
    r.formula = FormulaId::SymmetricIdentity;
    r.inputs = BTreeMap::from([("lambda".to_string(), lambda)]);
    Ok(r)
}

/// Bounds at the effective constants `(λ₁ + ε·Lip(TS⁻¹), λ₂ − ε)`; allows `λ₂ = 1`.
pub fn bounds_guo(
    lambda1: f64,
    lambda2: f64,
    eps: f64,
    lip_tsinv: f64,
    lip_s: f64,
    lip_sinv: f64,
) -> Result<BoundReport> {
    unit_interval("lambda1", lambda1)?;
    if !(0.0..=1.0).contains(&lambda2) {
        return Err(Error::domain("lambda2", format!("{lambda2} is outside [0, 1]")));
    }
    positive("lip_tsinv", lip_tsinv)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::domain("eps", format!("ε = {eps} must satisfy ε > 0")));
    }
    let l2 = lambda2 - eps;
    if !(l2 > 0.0) {
        return Err(Error::domain("eps", format!("λ₂ − ε = {l2} must satisfy λ₂ − ε > 0")));
    }
    if !(l2 < 1.0) {
        return Err(Error::domain("eps", format!("λ₂ − ε = {l2} must satisfy λ₂ − ε < 1")));
    }
    let l1 = lambda1 + eps * lip_tsinv;
    if !(l1 < 1.0) {
        return Err(Error::domain(
            "eps",
            format!("λ₁ + ε·Lip(TS⁻¹) = {l1} must satisfy λ₁ + ε·Lip(TS⁻¹) < 1"),
        ));
    }
    let mut r = bounds_main(l1, l2, lip_s, lip_sinv)?;
    r.formula = FormulaId::EpsilonShifted;
    r.inputs = BTreeMap::from([
        ("lambda1".to_string(), lambda1),
        ("lambda2".to_string(), lambda2),
        ("eps".to_string(), eps),
        ("lip_tsinv".to_string(), lip_tsinv),
        ("lip_s".to_string(), lip_s),
        ("lip_sinv".to_string(), lip_sinv),
        ("effective_lambda1".to_string(), l1),
        ("effective_lambda2".to_string(), l2),
    ]);
    Ok(r)
}

/// Evaluates [`bounds_guo`] over `eps_grid` and keeps the smallest
/// `lip_tinv_upper`. Grid points violating a condition are skipped.
pub fn guo_epsilon_sweep(
    lambda1: f64,
    lambda2: f64,
    eps_grid: &[f64],
    lip_tsinv: f64,
    lip_s: f64,
    lip_sinv: f64,
) -> Result<(f64, BoundReport)> {
    let mut best: Option<(f64, BoundReport)> = None;
    let mut last_err = Error::domain("eps_grid", "is empty");
    for &eps in eps_grid {
        match bounds_guo(lambda1, lambda2, eps, lip_tsinv, lip_s, lip_sinv) {
            Ok(r) => {
                if best.as_ref().is_none_or(|(_, b)| r.lip_tinv_upper < b.lip_tinv_upper) {
                    best = Some((eps, r));
                }
            }
            Err(e @ Error::Domain { .. }) => last_err = e,
            Err(e) => return Err(e),
        }
    }
    best.ok_or(last_err)
}

/// Constants for the combined inequality `‖ΔT−ΔS‖ ≤ (λ₁ᵖ‖ΔS‖ᵖ + λ₂ᵖ‖ΔT‖ᵖ)^{1/p}`
/// reduced to the additive form: unchanged for `p ≥ 1`, scaled by
/// `2^{1/p − 1}` for `0 < p < 1`.
pub fn reduce_p_combined(lambda1: f64, lambda2: f64, p: f64) -> Result<(f64, f64)> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::domain("p", format!("{p} must be positive")));
    }
    if p >= 1.0 {
        unit_interval("lambda1", lambda1)?;
        unit_interval("lambda2", lambda2)?;
        return Ok((lambda1, lambda2));
    }
    let cap = 2f64.powf(1.0 - 1.0 / p);
    for (param, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(v >= 0.0 && v < cap) {
            return Err(Error::domain(param, format!("{v} is outside [0, 2^(1-1/p)) = [0, {cap})")));
        }
    }
    let factor = 2f64.powf(1.0 / p - 1.0);
    Ok((factor * lambda1, factor * lambda2))
}

/// `Lip(T⁻¹) ≤ 2·Lip(S⁻¹)/(1−λ)` when `λ₂ = 1`.
pub fn bounds_lambda2_one(lambda: f64, lip_sinv: f64) -> Result<f64> {
    unit_interval("lambda", lambda)?;
    positive("lip_sinv", lip_sinv)?;
    finite("lip_tinv_upper", 2.0 * lip_sinv / (1.0 - lambda))
}

/// `Lip(A⁻¹) ≤ α/(1−β)` for `‖ΔA − αΔx‖ ≤ β‖ΔA‖`-type perturbations.
pub fn bounds_soderlind(alpha: f64, beta: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    unit_interval("beta", beta)?;
    finite("lip_ainv_upper", alpha / (1.0 - beta))
}

/// `(1−β)/(α(1−2β))` in general normed spaces (needs `β < 1/2`), or
/// `(1+β)/α` in Hilbert spaces.
pub fn bounds_barbagallo(alpha: f64, beta: f64, hilbert: bool) -> Result<f64> {
    positive("alpha", alpha)?;
    unit_interval("beta", beta)?;
    if hilbert {
        return finite("lip_ainv_upper", (1.0 + beta) / alpha);
    }
    if beta >= 0.5 {
        return Err(Error::domain(
            "beta",
            format!("{beta} ≥ 1/2; the general normed-space case needs β < 1/2"),
        ));
    }
    finite("lip_ainv_upper", (1.0 - beta) / (alpha * (1.0 - 2.0 * beta)))
}

/// Contraction rate `(λ₁+λ₂)/(1−λ₂)` of the fixed-point iteration for `TS⁻¹`.
pub fn q_contraction_rate(lambda1: f64, lambda2: f64) -> Result<f64> {
    if !(lambda1 >= 0.0 && lambda1.is_finite()) {
        return Err(Error::domain("lambda1", format!("{lambda1} must be ≥ 0")));
    }
    if !(0.0..1.0).contains(&lambda2) {
        return Err(Error::domain("lambda2", format!("{lambda2} is outside [0, 1)")));
    }
    Ok((lambda1 + lambda2) / (1.0 - lambda2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn main_examples() {
        let r = bounds_main(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(
            [r.lip_t_lower, r.lip_t_upper, r.lip_tinv_lower, r.lip_tinv_upper, r.invertibility_threshold],
            [1.0; 5]
        );
        let r = bounds_main(0.5, 0.25, 2.0, 0.5).unwrap();
        assert!((r.lip_t_lower - 0.8).abs() < 1e-15);
        assert!((r.lip_t_upper - 4.0).abs() < 1e-15);
        assert!((r.lip_tinv_lower - 0.25).abs() < 1e-15);
        assert!((r.lip_tinv_upper - 1.25).abs() < 1e-15);
        assert!((r.invertibility_threshold - 0.4).abs() < 1e-15);
        let near = bounds_main(1.0 - 1e-9, 0.0, 1.0, 1.0).unwrap();
        assert!(near.lip_tinv_upper.is_finite() && near.lip_tinv_upper > 1e8);
        assert!(bounds_main(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(bounds_main(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(bounds_main(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(bounds_main(0.0, 0.0, 1.0, 0.5).is_err());
        assert!(matches!(
            bounds_main(0.0, 0.0, 1e300, 1e300),
            Ok(_)
        ));
        assert!(matches!(bounds_main(0.5, 0.5, 1e308, 1.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn hilding_examples() {
        let r = bounds_hilding(0.5).unwrap();
        assert!((r.lip_t_lower - 1.0 / 3.0).abs() < 1e-15 && (r.lip_t_upper - 3.0).abs() < 1e-15);
        assert!((r.lip_tinv_lower - 1.0 / 3.0).abs() < 1e-15 && (r.lip_tinv_upper - 3.0).abs() < 1e-15);
        let m = bounds_main(0.5, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(r.lip_t_upper, m.lip_t_upper);
        assert!(bounds_hilding(1.0).is_err());
    }

    #[test]
    fn guo_examples() {
        let r = bounds_guo(0.0, 1.0, 0.5, 0.5, 1.0, 1.0).unwrap();
        let m = bounds_main(0.25, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(r.lip_tinv_upper, m.lip_tinv_upper);
        assert_eq!(r.lip_t_lower, m.lip_t_lower);
        let e = bounds_guo(0.1, 0.4, 0.4, 1.0, 1.0, 1.0).unwrap_err();
        assert!(e.to_string().contains("λ₂ − ε > 0"), "{e}");
        let e = bounds_guo(0.5, 0.9, 0.6, 1.0, 1.0, 1.0).unwrap_err();
        assert!(e.to_string().contains("Lip(TS⁻¹) < 1"), "{e}");
        assert!(bounds_guo(0.1, 0.4, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    /// Grid oracle over ε with step 1e-3.
    #[test]
    fn guo_sweep_matches_grid_oracle() {
        let (l1, l2, lr) = (0.1, 0.95, 1.3);
        let grid: Vec<f64> = (1..1000).map(|k| k as f64 * 1e-3).collect();
        let (eps, best) = guo_epsilon_sweep(l1, l2, &grid, lr, 1.0, 1.0).unwrap();
        let mut oracle = (f64::INFINITY, 0.0);
        for &e in &grid {
            let (a, b) = (l1 + e * lr, l2 - e);
            if e > 0.0 && b > 0.0 && b < 1.0 && a < 1.0 {
                let v = (1.0 + b) / (1.0 - a);
                if v < oracle.0 {
                    oracle = (v, e);
                }
            }
        }
        assert_eq!(eps, oracle.1);
        assert!((best.lip_tinv_upper - oracle.0).abs() < 1e-12);
    }

    #[test]
    fn p_combined_examples() {
        assert_eq!(reduce_p_combined(0.3, 0.4, 2.0).unwrap(), (0.3, 0.4));
        let (a, b) = reduce_p_combined(0.3, 0.4, 0.5).unwrap();
        assert!((a - 0.6).abs() < 1e-15 && (b - 0.8).abs() < 1e-15);
        assert!(reduce_p_combined(0.5, 0.1, 0.5).is_err());
        assert!(reduce_p_combined(0.1, 0.1, 0.0).is_err());
    }

    #[test]
    fn scalar_bound_examples() {
        assert_eq!(bounds_lambda2_one(0.0, 1.0).unwrap(), 2.0);
        assert_eq!(bounds_lambda2_one(0.5, 2.0).unwrap(), 8.0);
        assert!(bounds_lambda2_one(1.0, 1.0).is_err());
        assert_eq!(bounds_soderlind(1.0, 0.0).unwrap(), 1.0);
        assert_eq!(bounds_soderlind(2.0, 0.5).unwrap(), 4.0);
        assert_eq!(bounds_barbagallo(2.0, 0.0, false).unwrap(), 0.5);
        assert_eq!(bounds_barbagallo(2.0, 0.0, true).unwrap(), 0.5);
        assert!((bounds_barbagallo(1.0, 0.25, false).unwrap() - 1.5).abs() < 1e-15);
        assert!((bounds_barbagallo(1.0, 0.25, true).unwrap() - 1.25).abs() < 1e-15);
        let e = bounds_barbagallo(1.0, 0.5, false).unwrap_err();
        assert!(e.to_string().contains("β < 1/2"));
        assert_eq!(q_contraction_rate(0.0, 0.0).unwrap(), 0.0);
        assert!((q_contraction_rate(0.2, 0.2).unwrap() - 0.5).abs() < 1e-15);
        assert!(q_contraction_rate(0.4, 0.4).unwrap() > 1.0);
        assert!(q_contraction_rate(0.1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn inverse_upper_is_monotone(a in 0.0..0.99f64, b in 0.0..0.99f64, da in 0.0..0.009f64, db in 0.0..0.009f64) {
            let base = bounds_main(a, b, 1.0, 1.0).unwrap().lip_tinv_upper;
            prop_assert!(bounds_main(a + da, b, 1.0, 1.0).unwrap().lip_tinv_upper >= base);
            prop_assert!(bounds_main(a, b + db, 1.0, 1.0).unwrap().lip_tinv_upper >= base);
        }

        #[test]
        fn reports_are_ordered(a in 0.0..0.999f64, b in 0.0..0.999f64, s in 0.1..10.0f64, k in 1.0..5.0f64) {
            let r = bounds_main(a, b, s, k / s).unwrap();
            prop_assert!(r.lip_t_lower <= r.lip_t_upper);
            prop_assert!(r.lip_tinv_lower <= r.lip_tinv_upper);
            prop_assert!(r.lip_t_lower > 0.0 && r.lip_tinv_lower > 0.0);
        }

        #[test]
        fn p_one_is_identity(a in 0.0..0.999f64, b in 0.0..0.999f64) {
            prop_assert_eq!(reduce_p_combined(a, b, 1.0).unwrap(), (a, b));
        }
    }
}
