//! Lipschitz perturbation of maps on finite-dimensional normed spaces: constant
//! estimation, two-sided bounds, certified inversion, metric frames and
//! atomic decompositions.

pub mod atomic;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod maps;
pub mod perturb;
pub mod sampling;
pub mod scenario;
pub mod spaces;

pub use error::{Error, Result};
pub use maps::{Family, MapHandle};
pub use sampling::SamplerConfig;
pub use spaces::{Exponent, NormedSpace, Vector};
