//! Seeded point samplers and pair selection for on-sample estimates.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{NormedSpace, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Uniform in the box `[-radius, radius]^dim`.
    UniformBox,
    /// Independent centred normals with standard deviation `radius`.
    Gaussian,
    /// Regular grid over the box with `max(2, ⌊count^{1/dim}⌋)` nodes per axis.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub count: usize,
    pub seed: u64,
    pub radius: f64,
    pub scheme: Scheme,
    /// Cap on the number of pairs; `None` keeps all `C(count, 2)` pairs.
    pub pair_budget: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            count: 48,
            seed: 0,
            radius: 1.0,
            scheme: Scheme::UniformBox,
            pair_budget: Some(20_000),
        }
    }
}

impl SamplerConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        SamplerConfig {
            count,
            seed,
            ..Default::default()
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_pair_budget(mut self, budget: Option<usize>) -> Self {
        self.pair_budget = budget;
        self
    }

    /// Derives an independent sampler for a sub-task.
    pub fn reseeded(&self, salt: u64) -> Self {
        let mut s = self.clone();
        s.seed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(salt.wrapping_mul(0xD1B5_4A32_D192_ED03) | 1);
        s
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn points(&self, space: &NormedSpace) -> Result<Vec<Vector>> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::domain("radius", format!("{} is not positive", self.radius)));
        }
        let dim = space.dim();
        let mut rng = self.rng();
        let r = self.radius;
        let pts = match self.scheme {
            Scheme::UniformBox => (0..self.count)
                .map(|_| (0..dim).map(|_| rng.random_range(-r..=r)).collect())
                .collect(),
            Scheme::Gaussian => (0..self.count)
                .map(|_| {
                    (0..dim)
                        .map(|_| r * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect(),
            Scheme::Grid => grid(dim, self.count, r),
        };
        Ok(pts.into_iter().map(Vector::from_raw).collect())
    }

    /// Index pairs `(i, j)`, `i < j`, over `n` points.
    pub fn pairs(&self, n: usize) -> Vec<(usize, usize)> {
        let total = n * n.saturating_sub(1) / 2;
        let all = || (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)));
        match self.pair_budget {
            Some(budget) if budget < total => {
                let mut rng = self.reseeded(0x5041_4952).rng();
                let mut picked = index::sample(&mut rng, total, budget).into_vec();
                picked.sort_unstable();
                let mut out = Vec::with_capacity(budget);
                let mut it = picked.into_iter().peekable();
                for (k, pair) in all().enumerate() {
                    match it.peek() {
                        Some(&next) if next == k => {
                            out.push(pair);
                            it.next();
                        }
                        Some(_) => {}
                        None => break,
                    }
                }
                out
            }
            _ => all().collect(),
        }
    }
}

fn grid(dim: usize, count: usize, r: f64) -> Vec<Vec<f64>> {
    let k = ((count as f64).powf(1.0 / dim as f64).floor() as usize).max(2);
    let nodes: Vec<f64> = (0..k)
        .map(|i| -r + 2.0 * r * i as f64 / (k - 1) as f64)
        .collect();
    let total = k.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let v = nodes[idx % k];
                    idx /= k;
                    v
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = NormedSpace::euclidean(3);
        let cfg = SamplerConfig::new(10, 42);
        assert_eq!(cfg.points(&s).unwrap(), cfg.points(&s).unwrap());
        let other = SamplerConfig::new(10, 43);
        assert_ne!(cfg.points(&s).unwrap(), other.points(&s).unwrap());
    }

    #[test]
    fn pair_budget_subsamples_without_repeats() {
        let cfg = SamplerConfig::new(30, 1).with_pair_budget(Some(50));
        let pairs = cfg.pairs(30);
        assert_eq!(pairs.len(), 50);
        let mut dedup = pairs.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 50);
        assert!(pairs.iter().all(|(i, j)| i < j && *j < 30));
        assert_eq!(pairs, cfg.pairs(30));
        assert_eq!(cfg.with_pair_budget(None).pairs(5).len(), 10);
    }

    #[test]
    fn grid_covers_box_corners() {
        let s = NormedSpace::euclidean(2);
        let pts = SamplerConfig::new(9, 0)
            .with_scheme(Scheme::Grid)
            .with_radius(2.0)
            .points(&s)
            .unwrap();
        assert_eq!(pts.len(), 9);
        assert!(pts.iter().any(|p| p.coords() == [-2.0, -2.0]));
        assert!(pts.iter().any(|p| p.coords() == [2.0, 2.0]));
        assert!(pts.iter().any(|p| p.coords() == [0.0, 0.0]));
    }
}
