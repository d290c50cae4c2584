//! Perturbation constants, bound formulas, certified inversion and resolvent scans.

mod bounds;
mod frontier;
mod invert;
mod profile;
mod scan;

pub use bounds::{
    bounds_barbagallo, bounds_guo, bounds_hilding, bounds_lambda2_one, bounds_main, bounds_soderlind,
    guo_epsilon_sweep, q_contraction_rate, reduce_p_combined, BoundReport, FormulaId,
};
pub use frontier::{pareto_frontier, worst_slack, Constraint};
pub use invert::{
    invert_certified, invert_with_constants, ContractionMode, InversionCertificate, LipSource, ReferenceMap,
    SolverConfig,
};
pub use profile::{
    constraints_for_mu, estimate_profile, estimate_profile_mu, pair_data, profile_from_pairs, validate_profile,
    ObjectiveSpec, PairData, PerturbationProfile,
};
pub use scan::{resolvent_scan, ScanEntry, ScanReport};
