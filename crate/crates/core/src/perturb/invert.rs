//! Certified inversion of a perturbed map through `R = T∘S⁻¹`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bounds::{bounds_lambda2_one, q_contraction_rate};
use super::profile::PerturbationProfile;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::maps::{lip_exact_affine, MapHandle};
use crate::spaces::{NormedSpace, Vector};

/// How `Lip(S⁻¹)` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LipSource {
    Exact,
    Supplied,
}

/// A reference map `S` together with its inverse and a bound on `Lip(S⁻¹)`.
#[derive(Debug, Clone)]
pub struct ReferenceMap {
    pub forward: MapHandle,
    pub inverse: MapHandle,
    pub lip_inverse: f64,
    pub lip_source: LipSource,
}

impl ReferenceMap {
    pub fn new(forward: MapHandle, inverse: MapHandle, lip_inverse: f64) -> Result<Self> {
        if forward.domain().dim() != inverse.codomain().dim()
            || forward.codomain().dim() != inverse.domain().dim()
        {
            return Err(Error::DimensionMismatch {
                expected: forward.codomain().dim(),
                found: inverse.domain().dim(),
            });
        }
        if !(lip_inverse.is_finite() && lip_inverse > 0.0) {
            return Err(Error::domain("lip_inverse", format!("{lip_inverse} must be positive")));
        }
        Ok(ReferenceMap {
            forward,
            inverse,
            lip_inverse,
            lip_source: LipSource::Supplied,
        })
    }

    pub fn identity(space: &NormedSpace) -> Self {
        let id = MapHandle::identity(space);
        ReferenceMap {
            forward: id.clone(),
            inverse: id,
            lip_inverse: 1.0,
            lip_source: LipSource::Exact,
        }
    }

    /// Invertible linear `S` with exact `Lip(S⁻¹)` when the norms allow it.
    pub fn linear(forward: MapHandle) -> Result<Self> {
        let (matrix, offset) = forward
            .as_affine()
            .ok_or_else(|| Error::Unsupported("linear reference needs an affine map".into()))?;
        if !matrix.is_square() {
            return Err(Error::Unsupported("linear reference needs a square matrix".into()));
        }
        let inv_matrix = matrix.inverse()?;
        // S⁻¹(u) = A⁻¹(u − c)
        let shift = inv_matrix.mul_vec(offset)?.iter().map(|v| -v).collect();
        let inverse = MapHandle::affine(
            forward.codomain().clone(),
            forward.domain().clone(),
            inv_matrix,
            shift,
        )?;
        let (lip_inverse, lip_source) = match lip_exact_affine(&inverse) {
            Ok(l) => (l, LipSource::Exact),
            Err(Error::Unsupported(_)) => {
                return Err(Error::Unsupported(
                    "Lip(S⁻¹) has no exact value for these norms; use ReferenceMap::new".into(),
                ))
            }
            Err(e) => return Err(e),
        };
        Ok(ReferenceMap {
            forward,
            inverse,
            lip_inverse,
            lip_source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Stop once the residual bound falls to this value.
    pub target_residual: f64,
    pub max_iters: usize,
    /// Extra random starts for the best-effort solver.
    pub restarts: usize,
    pub seed: u64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            target_residual: 1e-10,
            max_iters: 500,
            restarts: 4,
            seed: 0,
            fd_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContractionMode {
    PicardContractive,
    BestEffortCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionCertificate {
    pub solution: Vector,
    /// Upper bound on `‖T(solution) − y‖`, including a rounding allowance.
    pub residual: f64,
    /// `Lip(T⁻¹)` upper bound times `residual`.
    pub error_radius: f64,
    pub iterations: usize,
    pub contraction_mode: ContractionMode,
    /// `(λ₁+λ₂)/(1−λ₂)`, or `None` when `λ₂ = 1`.
    pub rate: Option<f64>,
    pub lip_tinv_upper: f64,
    pub lip_sinv_source: LipSource,
    /// Residuals `‖R(u_k) − y‖` of the accepted fixed-point iterates.
    pub residual_history: Vec<f64>,
}

/// Rounding allowance added to a computed residual `‖fx − y‖`.
fn rounding_allowance(space: &NormedSpace, fx: &[f64], y: &[f64]) -> Result<f64> {
    let scale = space.norm(fx)? + space.norm(y)?;
    Ok(32.0 * space.dim() as f64 * f64::EPSILON * scale)
}

pub fn invert_certified(
    t_map: &MapHandle,
    y: &Vector,
    reference: &ReferenceMap,
    profile: &PerturbationProfile,
    cfg: &SolverConfig,
) -> Result<InversionCertificate> {
    invert_with_constants(t_map, y, reference, profile.lambda1, profile.lambda2, cfg)
}

/// Solves `T(x) = y` given `‖ΔT − ΔS‖ ≤ λ₁‖ΔS‖ + λ₂‖ΔT‖`.
pub fn invert_with_constants(
    t_map: &MapHandle,
    y: &Vector,
    reference: &ReferenceMap,
    lambda1: f64,
    lambda2: f64,
    cfg: &SolverConfig,
) -> Result<InversionCertificate> {
    if !(0.0..1.0).contains(&lambda1) {
        return Err(Error::domain("lambda1", format!("{lambda1} is outside [0, 1)")));
    }
    if !(0.0..=1.0).contains(&lambda2) {
        return Err(Error::domain("lambda2", format!("{lambda2} is outside [0, 1]")));
    }
    if !(cfg.target_residual.is_finite() && cfg.target_residual > 0.0) {
        return Err(Error::domain("target_residual", "must be positive"));
    }
    if t_map.domain().dim() != reference.forward.domain().dim()
        || t_map.codomain().dim() != reference.forward.codomain().dim()
    {
        return Err(Error::DimensionMismatch {
            expected: reference.forward.domain().dim(),
            found: t_map.domain().dim(),
        });
    }
    t_map.codomain().check(y)?;

    let lip_tinv_upper = if lambda2 == 1.0 {
        bounds_lambda2_one(lambda1, reference.lip_inverse)?
    } else {
        let k = (1.0 + lambda2) / (1.0 - lambda1) * reference.lip_inverse;
        if !k.is_finite() {
            return Err(Error::Overflow("lip_tinv_upper"));
        }
        k
    };
    let rate = if lambda2 < 1.0 {
        Some(q_contraction_rate(lambda1, lambda2)?)
    } else {
        None
    };
    let ctx = Ctx {
        t_map,
        y,
        reference,
        lip_tinv_upper,
        rate,
        cfg,
    };

    let picard = match rate {
        Some(q) if q < 1.0 => Some(ctx.picard(q)?),
        _ => None,
    };
    if let Some(c) = &picard {
        if c.residual <= cfg.target_residual {
            return Ok(c.clone());
        }
    }
    let start = match &picard {
        Some(c) => c.solution.clone(),
        None => reference.inverse.evaluate(y)?,
    };
    let best = ctx.best_effort(start)?;
    let best = match picard {
        Some(p) if p.residual < best.residual => p,
        _ => best,
    };
    if best.residual <= cfg.target_residual {
        Ok(best)
    } else {
        Err(Error::NonConvergence {
            residual: best.residual,
            iterations: best.iterations,
            best: Box::new(best),
        })
    }
}

struct Ctx<'a> {
    t_map: &'a MapHandle,
    y: &'a Vector,
    reference: &'a ReferenceMap,
    lip_tinv_upper: f64,
    rate: Option<f64>,
    cfg: &'a SolverConfig,
}

impl Ctx<'_> {
    fn space(&self) -> &NormedSpace {
        self.t_map.codomain()
    }

    /// Certified residual bound of `x`.
    fn residual_of(&self, x: &Vector) -> Result<(f64, Vector)> {
        let tx = self.t_map.evaluate(x)?;
        let diff = &tx - self.y;
        let r = self.space().norm(&diff)? + rounding_allowance(self.space(), &tx, self.y)?;
        Ok((r, diff))
    }

    fn certificate(
        &self,
        x: Vector,
        iterations: usize,
        mode: ContractionMode,
        history: Vec<f64>,
    ) -> Result<InversionCertificate> {
        let (residual, _) = self.residual_of(&x)?;
        Ok(InversionCertificate {
            error_radius: self.lip_tinv_upper * residual,
            solution: x,
            residual,
            iterations,
            contraction_mode: mode,
            rate: self.rate,
            lip_tinv_upper: self.lip_tinv_upper,
            lip_sinv_source: self.reference.lip_source,
            residual_history: history,
        })
    }

    /// `u_{k+1} = u_k − (R(u_k) − y)` from `u₀ = y`. An iterate is accepted only
    /// while it contracts at the guaranteed rate; once rounding dominates, the
    /// last accepted iterate is kept.
    fn picard(&self, q: f64) -> Result<InversionCertificate> {
        let space = self.space();
        let residual_vec = |u: &Vector| -> Result<(Vector, Vector, Vector)> {
            let x = self.reference.inverse.evaluate(u)?;
            let tx = self.t_map.evaluate(&x)?;
            let r = &tx - self.y;
            Ok((x, tx, r))
        };
        let mut u = self.y.clone();
        let (mut x, mut tx, mut r) = residual_vec(&u)?;
        let mut rho = space.norm(&r)?;
        let mut history = vec![rho];
        let mut evals = 1;
        while rho > 0.0 && evals < self.cfg.max_iters {
            if rho + rounding_allowance(space, &tx, self.y)? <= self.cfg.target_residual {
                break;
            }
            let next_u = &u - &r;
            let (next_x, next_tx, next_r) = residual_vec(&next_u)?;
            evals += 1;
            let next_rho = space.norm(&next_r)?;
            if next_rho > q * rho * (1.0 + 1e-9) {
                break;
            }
            u = next_u;
            x = next_x;
            tx = next_tx;
            r = next_r;
            rho = next_rho;
            history.push(rho);
        }
        self.certificate(x, evals, ContractionMode::PicardContractive, history)
    }

    /// Multi-start damped Newton with a forward-difference Jacobian.
    fn best_effort(&self, start: Vector) -> Result<InversionCertificate> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut best: Option<(f64, Vector)> = None;
        let mut total = 0;
        let scale = start.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for attempt in 0..=self.cfg.restarts {
            let x0 = if attempt == 0 {
                start.clone()
            } else {
                let jitter = scale * 0.5f64.powi(attempt as i32 - 1);
                Vector::new(start.iter().map(|v| v + jitter * rng.random_range(-1.0..=1.0)).collect())?
            };
            let budget = self.cfg.max_iters.saturating_sub(total).max(1) / (self.cfg.restarts + 1 - attempt).max(1);
            let (x, used) = self.newton(x0, budget.max(1))?;
            total += used;
            let (res, _) = self.residual_of(&x)?;
            if best.as_ref().is_none_or(|(b, _)| res < *b) {
                best = Some((res, x));
            }
            if best.as_ref().is_some_and(|(b, _)| *b <= self.cfg.target_residual) {
                break;
            }
        }
        let (_, x) = best.expect("at least one attempt");
        self.certificate(x, total, ContractionMode::BestEffortCertified, Vec::new())
    }

    fn newton(&self, mut x: Vector, budget: usize) -> Result<(Vector, usize)> {
        let (mut res, mut f) = self.residual_of(&x)?;
        let mut used = 0;
        while used < budget && res > self.cfg.target_residual {
            used += 1;
            let jac = self.jacobian(&x, &f)?;
            let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
            let step = match jac.solve(&neg_f) {
                Ok(s) => s,
                Err(_) => neg_f,
            };
            let mut damping = 1.0;
            let mut improved = false;
            while damping > 1e-12 {
                let cand = match Vector::new(x.iter().zip(&step).map(|(a, s)| a + damping * s).collect()) {
                    Ok(c) => c,
                    Err(_) => break,
                };
                let (cres, cf) = match self.residual_of(&cand) {
                    Ok(v) => v,
                    Err(Error::NonFinite { .. }) => {
                        damping *= 0.5;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                if cres < res {
                    x = cand;
                    res = cres;
                    f = cf;
                    improved = true;
                    break;
                }
                damping *= 0.5;
            }
            if !improved {
                break;
            }
        }
        Ok((x, used))
    }

    fn jacobian(&self, x: &Vector, f: &Vector) -> Result<Matrix> {
        let n = x.len();
        let m = f.len();
        let mut jac = Matrix::zeros(m, n);
        for j in 0..n {
            let h = self.cfg.fd_step * x[j].abs().max(1.0);
            let mut xp = x.coords().to_vec();
            xp[j] += h;
            let h = xp[j] - x[j];
            let fp = &self.t_map.evaluate(&xp)? - self.y;
            for i in 0..m {
                jac[(i, j)] = (fp[i] - f[i]) / h;
            }
        }
        Ok(jac)
    }
}
