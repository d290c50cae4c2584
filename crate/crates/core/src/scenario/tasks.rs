//! Task kinds and their execution.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{RunOptions, World};
use crate::atomic::{
    check_decomposition, dilate, lift_decomposition, perturb_decomposition, schauder_check, AtomicDecomposition,
    LiftConstants, DILATION_TOLERANCE, SPAN_PIVOT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::frames::{atomic_from_frame, frame_bounds_estimate, frame_from_atomic, perturb_frame};
use crate::maps::{lip_estimate, lip_exact_affine, MapHandle};
use crate::perturb::{
    bounds_barbagallo, bounds_guo, bounds_hilding, bounds_lambda2_one, bounds_main, bounds_soderlind,
    estimate_profile, estimate_profile_mu, guo_epsilon_sweep, invert_certified, reduce_p_combined, resolvent_scan,
    BoundReport, ObjectiveSpec, PerturbationProfile, ReferenceMap, SolverConfig,
};
use crate::sampling::SamplerConfig;
use crate::spaces::Vector;

/// Relative slack allowed when comparing exact constants with bound intervals.
const SANDWICH_SLACK: f64 = 1e-9;
/// Reconstruction tolerance of perturbed frames and decompositions.
const RECONSTRUCTION_TOLERANCE: f64 = 1e-7;
/// Nesting limit for `demo` tasks.
const MAX_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            pass,
            detail,
        }
    }
}

/// Perturbation constants given directly instead of estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(default)]
    pub mu: f64,
}

impl Constants {
    fn profile(&self) -> Result<PerturbationProfile> {
        PerturbationProfile::from_constants(self.lambda1, self.lambda2, self.mu)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "formula", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundsTask {
    Main {
        lambda1: f64,
        lambda2: f64,
        lip_s: f64,
        lip_sinv: f64,
    },
    SymmetricIdentity {
        lambda: f64,
    },
    EpsilonShifted {
        lambda1: f64,
        lambda2: f64,
        eps: f64,
        lip_tsinv: f64,
        #[serde(default = "one")]
        lip_s: f64,
        #[serde(default = "one")]
        lip_sinv: f64,
    },
    EpsilonSweep {
        lambda1: f64,
        lambda2: f64,
        eps_grid: Vec<f64>,
        lip_tsinv: f64,
        #[serde(default = "one")]
        lip_s: f64,
        #[serde(default = "one")]
        lip_sinv: f64,
    },
    PCombined {
        lambda1: f64,
        lambda2: f64,
        p: f64,
        #[serde(default = "one")]
        lip_s: f64,
        #[serde(default = "one")]
        lip_sinv: f64,
    },
    Lambda2One {
        lambda: f64,
        lip_sinv: f64,
    },
    Soderlind {
        alpha: f64,
        beta: f64,
    },
    Barbagallo {
        alpha: f64,
        beta: f64,
        #[serde(default)]
        hilbert: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    EstimateLip {
        map: String,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
    },
    EstimateProfile {
        s: String,
        t: String,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
        #[serde(default)]
        objective: ObjectiveSpec,
        #[serde(default)]
        mu_grid: Option<Vec<f64>>,
        #[serde(default)]
        upper_bound: Option<f64>,
        #[serde(default)]
        lip_s: Option<f64>,
        #[serde(default)]
        lip_sinv: Option<f64>,
    },
    Bounds(BoundsTask),
    Invert {
        s: String,
        t: String,
        y: Vec<f64>,
        #[serde(default)]
        s_inverse: Option<String>,
        #[serde(default)]
        lip_sinv: Option<f64>,
        #[serde(default)]
        constants: Option<Constants>,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
        #[serde(default)]
        objective: ObjectiveSpec,
        #[serde(default)]
        solver: Option<SolverConfig>,
    },
    ResolventScan {
        s: String,
        t: String,
        alpha_grid: Vec<f64>,
        #[serde(default)]
        constants: Option<Constants>,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
        #[serde(default)]
        objective: ObjectiveSpec,
    },
    FramePerturb {
        frame: String,
        t: String,
        #[serde(default)]
        constants: Option<Constants>,
        #[serde(default)]
        mu_grid: Option<Vec<f64>>,
        #[serde(default)]
        objective: ObjectiveSpec,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
        #[serde(default)]
        validation: Option<SamplerConfig>,
        #[serde(default)]
        solver: Option<SolverConfig>,
    },
    AtomicPerturb {
        decomposition: String,
        new_atoms: Vec<Vec<f64>>,
        #[serde(default)]
        constants: Option<Constants>,
        #[serde(default)]
        mu_grid: Option<Vec<f64>>,
        #[serde(default)]
        objective: ObjectiveSpec,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
        #[serde(default)]
        validation: Option<SamplerConfig>,
        #[serde(default)]
        solver: Option<SolverConfig>,
    },
    Dilate {
        decomposition: String,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
    },
    SchauderCheck {
        #[serde(default)]
        decomposition: Option<String>,
        #[serde(default)]
        atoms: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        space: Option<String>,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
        #[serde(default)]
        pivot_threshold: Option<f64>,
        #[serde(default = "yes")]
        expect_basis: bool,
    },
    Lift {
        decomposition: String,
        a: String,
        b: String,
        lip_a: f64,
        #[serde(default)]
        norm_b: Option<f64>,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
        #[serde(default)]
        validation: Option<SamplerConfig>,
    },
    FrameAtomic {
        decomposition: String,
        #[serde(default)]
        sampler: Option<SamplerConfig>,
    },
    Demo {
        name: String,
    },
}

fn yes() -> bool {
    true
}

pub(crate) struct Ctx<'a> {
    pub seed: u64,
    pub world: &'a World,
    pub depth: usize,
    pub options: &'a RunOptions,
}

impl Ctx<'_> {
    /// Task sampler with its `seed` taken as an offset from the scenario seed.
    fn sampler(&self, s: &Option<SamplerConfig>) -> SamplerConfig {
        let mut c = s.clone().unwrap_or_default();
        c.seed = c.seed.wrapping_add(self.seed);
        c
    }

    fn validation(&self, v: &Option<SamplerConfig>, base: &SamplerConfig) -> SamplerConfig {
        match v {
            Some(_) => self.sampler(v),
            None => base.reseeded(7),
        }
    }

    fn solver(&self, s: &Option<SolverConfig>) -> SolverConfig {
        let mut c = s.clone().unwrap_or_default();
        c.seed = c.seed.wrapping_add(self.seed);
        c
    }
}

pub(crate) struct TaskOutput {
    pub result: Value,
    pub checks: Vec<Check>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types serialize")
}

fn within(name: &str, x: f64, lo: f64, hi: f64) -> Check {
    let ok = x >= lo * (1.0 - SANDWICH_SLACK) && x <= hi * (1.0 + SANDWICH_SLACK);
    Check::new(name, ok, format!("{x} in [{lo}, {hi}]"))
}

fn at_most(name: &str, x: f64, limit: f64) -> Check {
    Check::new(name, x <= limit, format!("{x:.3e} ≤ {limit:.1e}"))
}

fn report_checks(r: &BoundReport) -> Vec<Check> {
    vec![
        Check::new(
            "Lip(T) interval ordered",
            r.lip_t_lower <= r.lip_t_upper,
            format!("[{}, {}]", r.lip_t_lower, r.lip_t_upper),
        ),
        Check::new(
            "Lip(T⁻¹) interval ordered",
            r.lip_tinv_lower <= r.lip_tinv_upper,
            format!("[{}, {}]", r.lip_tinv_lower, r.lip_tinv_upper),
        ),
    ]
}

/// Exact `(Lip(S), Lip(S⁻¹))` for an invertible affine map on plain ℓᵖ.
fn exact_pair(m: &MapHandle) -> Option<(f64, f64)> {
    let fwd = lip_exact_affine(m).ok()?;
    let inv = ReferenceMap::linear(m.clone()).ok()?;
    Some((fwd, inv.lip_inverse))
}

fn profile_for(
    constants: &Option<Constants>,
    s: &MapHandle,
    t: &MapHandle,
    sampler: &SamplerConfig,
    objective: ObjectiveSpec,
    mu: Option<(&[f64], f64)>,
) -> Result<PerturbationProfile> {
    match (constants, mu) {
        (Some(c), _) => c.profile(),
        (None, Some((grid, b))) => estimate_profile_mu(s, t, sampler, grid, b, objective),
        (None, None) => estimate_profile(s, t, sampler, objective),
    }
}

pub(crate) fn execute(task: &Task, ctx: &Ctx) -> Result<TaskOutput> {
    let w = ctx.world;
    match task {
        Task::EstimateLip { map, sampler } => {
            let m = w.map(map)?;
            let est = lip_estimate(m, &ctx.sampler(sampler))?;
            let exact = lip_exact_affine(m).ok();
            let mut checks = Vec::new();
            if let Some(e) = exact {
                checks.push(Check::new(
                    "sampled lower bound ≤ exact constant",
                    est.lower <= e * (1.0 + 1e-12),
                    format!("{} ≤ {e}", est.lower),
                ));
            }
            Ok(TaskOutput {
                result: json!({ "estimate": est, "exact": exact }),
                checks,
            })
        }
        Task::EstimateProfile {
            s,
            t,
            sampler,
            objective,
            mu_grid,
            upper_bound,
            lip_s,
            lip_sinv,
        } => {
            let (sm, tm) = (w.map(s)?, w.map(t)?);
            let smp = ctx.sampler(sampler);
            let mu = match (mu_grid, upper_bound) {
                (Some(g), Some(b)) => Some((g.as_slice(), *b)),
                (Some(_), None) => {
                    return Err(Error::Parse("estimate-profile: `mu_grid` needs `upper_bound`".into()))
                }
                _ => None,
            };
            let profile = profile_for(&None, sm, tm, &smp, *objective, mu)?;
            let reference = match (lip_s, lip_sinv) {
                (Some(a), Some(b)) => Some((*a, *b)),
                _ => exact_pair(sm),
            };
            let mut checks = Vec::new();
            let bounds = match reference {
                Some((ls, lsi)) if profile.lambda2 < 1.0 && profile.mu == 0.0 => {
                    Some(bounds_main(profile.lambda1, profile.lambda2, ls, lsi)?)
                }
                _ => None,
            };
            let exact_t = exact_pair(tm);
            if let (Some(b), Some((lt, lti))) = (&bounds, exact_t) {
                checks.extend(report_checks(b));
                checks.push(within("exact Lip(T) inside bounds", lt, b.lip_t_lower, b.lip_t_upper));
                checks.push(within("exact Lip(T⁻¹) inside bounds", lti, b.lip_tinv_lower, b.lip_tinv_upper));
            }
            Ok(TaskOutput {
                result: json!({
                    "profile": profile,
                    "reference": reference.map(|(a, b)| json!({"lip_s": a, "lip_sinv": b})),
                    "bounds": bounds,
                    "exact": exact_t.map(|(a, b)| json!({"lip_t": a, "lip_tinv": b})),
                }),
                checks,
            })
        }
        Task::Bounds(b) => bounds_task(b),
        Task::Invert {
            s,
            t,
            y,
            s_inverse,
            lip_sinv,
            constants,
            sampler,
            objective,
            solver,
        } => {
            let (sm, tm) = (w.map(s)?, w.map(t)?);
            let reference = match s_inverse {
                Some(inv) => {
                    let l = lip_sinv
                        .ok_or_else(|| Error::Parse("invert: `s_inverse` needs `lip_sinv`".into()))?;
                    ReferenceMap::new(sm.clone(), w.map(inv)?.clone(), l)?
                }
                None => ReferenceMap::linear(sm.clone())?,
            };
            let profile = profile_for(constants, sm, tm, &ctx.sampler(sampler), *objective, None)?;
            let cfg = ctx.solver(solver);
            let target = tm.codomain().vector(y.clone())?;
            let cert = invert_certified(tm, &target, &reference, &profile, &cfg)?;
            let mut checks = vec![at_most("residual bound", cert.residual, cfg.target_residual)];
            let mut exact_error = None;
            if let Some((a, c)) = tm.as_affine() {
                if a.is_square() {
                    let rhs: Vec<f64> = y.iter().zip(c).map(|(u, v)| u - v).collect();
                    if let Ok(x) = a.solve(&rhs) {
                        let err = tm.domain().distance(&x, &cert.solution)?;
                        checks.push(Check::new(
                            "true error ≤ error radius",
                            err <= cert.error_radius,
                            format!("{err:.3e} ≤ {:.3e}", cert.error_radius),
                        ));
                        exact_error = Some(err);
                    }
                }
            }
            Ok(TaskOutput {
                result: json!({ "profile": profile, "certificate": cert, "exact_error": exact_error }),
                checks,
            })
        }
        Task::ResolventScan {
            s,
            t,
            alpha_grid,
            constants,
            sampler,
            objective,
        } => {
            let (sm, tm) = (w.map(s)?, w.map(t)?);
            let smp = ctx.sampler(sampler);
            let profile = profile_for(constants, sm, tm, &smp, *objective, None)?;
            let scan = resolvent_scan(sm, tm, &profile, alpha_grid, &smp.reseeded(2));
            let checks = vec![Check::new(
                "no singular αS − T below the threshold",
                scan.violations == 0,
                format!("{} violations over {} grid points", scan.violations, scan.entries.len()),
            )];
            Ok(TaskOutput {
                result: json!({ "profile": profile, "scan": scan }),
                checks,
            })
        }
        Task::FramePerturb {
            frame,
            t,
            constants,
            mu_grid,
            objective,
            sampler,
            validation,
            solver,
        } => {
            let f = w.frame(frame)?;
            let tm = w.map(t)?;
            let smp = ctx.sampler(sampler);
            let b = f.claimed_bounds().1;
            let profile = profile_for(
                constants,
                f.synthesis(),
                tm,
                &smp,
                *objective,
                mu_grid.as_deref().map(|g| (g, b)),
            )?;
            let out = perturb_frame(f, tm, &profile, &smp, &ctx.solver(solver))?;
            let (lo, hi) = out.frame.claimed_bounds();
            let est = frame_bounds_estimate(&out.frame, &ctx.validation(validation, &smp))?;
            let checks = vec![
                Check::new(
                    "empirical lower bound ≥ predicted",
                    est.a_emp >= lo * (1.0 - SANDWICH_SLACK),
                    format!("{} ≥ {lo}", est.a_emp),
                ),
                Check::new(
                    "empirical upper bound ≤ predicted",
                    est.b_emp <= hi * (1.0 + SANDWICH_SLACK),
                    format!("{} ≤ {hi}", est.b_emp),
                ),
                at_most(
                    "reconstruction error",
                    out.reconstruction_max_error.max(est.reconstruction_max_error),
                    RECONSTRUCTION_TOLERANCE,
                ),
            ];
            Ok(TaskOutput {
                result: json!({
                    "profile": profile,
                    "effective_lambda1": out.effective_lambda1,
                    "profile_slack": out.profile_slack,
                    "predicted_bounds": [lo, hi],
                    "empirical": est,
                }),
                checks,
            })
        }
        Task::AtomicPerturb {
            decomposition,
            new_atoms,
            constants,
            mu_grid,
            objective,
            sampler,
            validation,
            solver,
        } => {
            let dec = w.decomposition(decomposition)?;
            let atoms = new_atoms
                .iter()
                .map(|a| Vector::new(a.clone()))
                .collect::<Result<Vec<_>>>()?;
            let smp = ctx.sampler(sampler);
            let profile = match constants {
                Some(c) => c.profile()?,
                None => {
                    let s_synth = frame_from_atomic(dec)?.synthesis().clone();
                    let target = AtomicDecomposition::new(
                        dec.base().clone(),
                        dec.functionals().to_vec(),
                        atoms.clone(),
                        dec.seq_space().clone(),
                        dec.claimed_bounds(),
                    )?;
                    let t_synth = frame_from_atomic(&target)?.synthesis().clone();
                    let b = dec.claimed_bounds().1;
                    profile_for(&None, &s_synth, &t_synth, &smp, *objective, mu_grid.as_deref().map(|g| (g, b)))?
                }
            };
            let out = perturb_decomposition(dec, atoms, &profile, &smp, &ctx.solver(solver))?;
            let rep = check_decomposition(
                &out.decomposition,
                &ctx.validation(validation, &smp),
                RECONSTRUCTION_TOLERANCE,
            )?;
            let checks = vec![
                Check::new(
                    "bounds hold on the sample",
                    rep.bounds_ok,
                    format!("[{}, {}] within {:?}", rep.a_emp, rep.b_emp, rep.claimed_bounds),
                ),
                Check::new(
                    "reconstruction",
                    rep.reconstruction_ok,
                    format!("max error {:.3e}", rep.reconstruction_max_error),
                ),
            ];
            Ok(TaskOutput {
                result: json!({
                    "profile": profile,
                    "effective_lambda1": out.effective_lambda1,
                    "profile_slack": out.profile_slack,
                    "validation": rep,
                }),
                checks,
            })
        }
        Task::Dilate { decomposition, sampler } => {
            let dec = w.decomposition(decomposition)?;
            let smp = ctx.sampler(sampler);
            let r = dilate(dec, &smp)?;
            let c = r.checks;
            let mut worst_triangle: f64 = 0.0;
            let pts = smp.reseeded(3).points(&r.z)?;
            for (i, j) in smp.reseeded(3).pairs(pts.len()) {
                let sum: Vec<f64> = pts[i].iter().zip(pts[j].iter()).map(|(a, b)| a + b).collect();
                let lhs = r.z.norm(&sum)?;
                let rhs = r.z.norm(&pts[i])? + r.z.norm(&pts[j])?;
                worst_triangle = worst_triangle.max((lhs - rhs) / rhs.max(f64::MIN_POSITIVE));
            }
            let checks = vec![
                at_most("P² = P", c.idempotence_error, DILATION_TOLERANCE),
                at_most("Γθ = id", c.left_inverse_error, DILATION_TOLERANCE),
                at_most("Pωₙ = θτₙ", c.basis_error, DILATION_TOLERANCE),
                Check::new(
                    "Z-norm triangle inequality",
                    worst_triangle <= 1e-12,
                    format!("worst relative excess {worst_triangle:.3e}"),
                ),
            ];
            Ok(TaskOutput {
                result: json!({
                    "z": r.z,
                    "z_dim": r.z.dim(),
                    "zero_atoms": r.zero_atoms,
                    "nonzero_functionals_dropped": r.nonzero_functionals_dropped,
                    "direct_sum_norm": r.direct_sum_norm,
                    "basis_vectors": r.basis_vectors,
                    "checks": c,
                }),
                checks,
            })
        }
        Task::SchauderCheck {
            decomposition,
            atoms,
            space,
            sampler,
            pivot_threshold,
            expect_basis,
        } => {
            let (atoms, space) = match (decomposition, atoms, space) {
                (Some(d), None, None) => {
                    let dec = w.decomposition(d)?;
                    (dec.atoms().to_vec(), dec.base().clone())
                }
                (None, Some(a), Some(s)) => (
                    a.iter().map(|v| Vector::new(v.clone())).collect::<Result<Vec<_>>>()?,
                    w.space(s)?.clone(),
                ),
                _ => {
                    return Err(Error::Parse(
                        "schauder-check: give either `decomposition` or both `atoms` and `space`".into(),
                    ))
                }
            };
            let rep = schauder_check(
                &atoms,
                &space,
                &ctx.sampler(sampler),
                pivot_threshold.unwrap_or(SPAN_PIVOT_THRESHOLD),
            )?;
            let checks = vec![Check::new(
                "basis verdict",
                rep.pass == *expect_basis,
                format!("basis: {}, expected {}", rep.pass, expect_basis),
            )];
            Ok(TaskOutput {
                result: to_value(&rep),
                checks,
            })
        }
        Task::Lift {
            decomposition,
            a,
            b,
            lip_a,
            norm_b,
            sampler,
            validation,
        } => {
            let dec = w.decomposition(decomposition)?;
            let smp = ctx.sampler(sampler);
            let lifted = lift_decomposition(
                dec,
                w.map(a)?,
                w.map(b)?,
                LiftConstants {
                    lip_a: *lip_a,
                    norm_b: *norm_b,
                },
                &smp,
            )?;
            let rep = check_decomposition(&lifted, &ctx.validation(validation, &smp), 1e-9)?;
            let checks = vec![
                Check::new(
                    "lifted bounds hold on the sample",
                    rep.bounds_ok,
                    format!("[{}, {}] within {:?}", rep.a_emp, rep.b_emp, rep.claimed_bounds),
                ),
                Check::new(
                    "lifted reconstruction",
                    rep.reconstruction_ok,
                    format!("max error {:.3e}", rep.reconstruction_max_error),
                ),
            ];
            Ok(TaskOutput {
                result: json!({
                    "claimed_bounds": [lifted.claimed_bounds().0, lifted.claimed_bounds().1],
                    "atoms": lifted.atoms(),
                    "validation": rep,
                }),
                checks,
            })
        }
        Task::FrameAtomic { decomposition, sampler } => {
            let dec = w.decomposition(decomposition)?;
            let smp = ctx.sampler(sampler);
            let frame = frame_from_atomic(dec)?;
            let back = atomic_from_frame(&frame)?;
            let mut coeff_diff: f64 = 0.0;
            let mut recon_diff: f64 = 0.0;
            for x in smp.points(dec.base())? {
                let c1 = dec.coefficients(&x)?;
                let c2 = frame.analysis(&x)?;
                coeff_diff = coeff_diff.max(dec.seq_space().distance(&c1, &c2)?);
                let r1 = dec.reconstruct(&x)?;
                let r2 = frame.synthesis().evaluate(&c2)?;
                let r3 = back.reconstruct(&x)?;
                recon_diff = recon_diff
                    .max(dec.base().distance(&r1, &r2)?)
                    .max(dec.base().distance(&r1, &r3)?);
            }
            let atom_diff = dec
                .atoms()
                .iter()
                .zip(back.atoms())
                .map(|(a, b)| dec.base().distance(a, b))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let fb = frame_bounds_estimate(&frame, &smp)?;
            let dv = check_decomposition(dec, &smp, 1e-9)?;
            let checks = vec![
                at_most("analysis equals coefficient map", coeff_diff, 1e-12),
                at_most("synthesis equals atom sum", recon_diff, 1e-12),
                at_most("atoms recovered from synthesis", atom_diff, 1e-12),
                Check::new(
                    "same empirical bounds",
                    fb.a_emp == dv.a_emp && fb.b_emp == dv.b_emp,
                    format!("frame [{}, {}], decomposition [{}, {}]", fb.a_emp, fb.b_emp, dv.a_emp, dv.b_emp),
                ),
                Check::new("decomposition valid", dv.pass, format!("bounds {}, reconstruction {}", dv.bounds_ok, dv.reconstruction_ok)),
            ];
            Ok(TaskOutput {
                result: json!({
                    "frame_estimate": fb,
                    "decomposition_validation": dv,
                    "coefficient_difference": coeff_diff,
                    "reconstruction_difference": recon_diff,
                }),
                checks,
            })
        }
        Task::Demo { name } => {
            if ctx.depth >= MAX_DEPTH {
                return Err(Error::Parse(format!("demo `{name}`: nesting deeper than {MAX_DEPTH}")));
            }
            let mut sc = super::demo(name)?;
            let r = super::run_at_depth(&mut sc, ctx.options, ctx.depth + 1)?;
            let checks = r
                .report
                .checks
                .iter()
                .map(|c| Check::new(format!("{name}: {}", c.name), c.pass, c.detail.clone()))
                .chain(r.report.error.as_ref().map(|e| {
                    Check::new(format!("{name}: completed"), false, format!("{}: {}", e.kind, e.message))
                }))
                .collect();
            Ok(TaskOutput {
                result: json!({ "demo": r.report.name, "validates": r.report.validates, "result": r.report.result }),
                checks,
            })
        }
    }
}

fn bounds_task(b: &BoundsTask) -> Result<TaskOutput> {
    let report = |r: BoundReport| TaskOutput {
        checks: report_checks(&r),
        result: to_value(&r),
    };
    let scalar = |key: &str, v: f64| TaskOutput {
        result: json!({ key: v }),
        checks: Vec::new(),
    };
    Ok(match *b {
        BoundsTask::Main {
            lambda1,
            lambda2,
            lip_s,
            lip_sinv,
        } => report(bounds_main(lambda1, lambda2, lip_s, lip_sinv)?),
        BoundsTask::SymmetricIdentity { lambda } => report(bounds_hilding(lambda)?),
        BoundsTask::EpsilonShifted {
            lambda1,
            lambda2,
            eps,
            lip_tsinv,
            lip_s,
            lip_sinv,
        } => report(bounds_guo(lambda1, lambda2, eps, lip_tsinv, lip_s, lip_sinv)?),
        BoundsTask::EpsilonSweep {
            lambda1,
            lambda2,
            ref eps_grid,
            lip_tsinv,
            lip_s,
            lip_sinv,
        } => {
            let (eps, r) = guo_epsilon_sweep(lambda1, lambda2, eps_grid, lip_tsinv, lip_s, lip_sinv)?;
            TaskOutput {
                checks: report_checks(&r),
                result: json!({ "best_eps": eps, "report": r }),
            }
        }
        BoundsTask::PCombined {
            lambda1,
            lambda2,
            p,
            lip_s,
            lip_sinv,
        } => {
            let (l1, l2) = reduce_p_combined(lambda1, lambda2, p)?;
            let r = bounds_main(l1, l2, lip_s, lip_sinv)?;
            TaskOutput {
                checks: report_checks(&r),
                result: json!({ "lambda1_reduced": l1, "lambda2_reduced": l2, "bounds": r }),
            }
        }
        BoundsTask::Lambda2One { lambda, lip_sinv } => scalar("lip_tinv_upper", bounds_lambda2_one(lambda, lip_sinv)?),
        BoundsTask::Soderlind { alpha, beta } => scalar("lip_ainv_upper", bounds_soderlind(alpha, beta)?),
        BoundsTask::Barbagallo { alpha, beta, hilbert } => {
            scalar("lip_ainv_upper", bounds_barbagallo(alpha, beta, hilbert)?)
        }
    })
}
