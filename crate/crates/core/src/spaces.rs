//! Finite-dimensional normed spaces.
//!
//! Every concrete carrier in the crate is `ℝ^dim` with either a (weighted)
//! ℓᵖ norm, `1 ≤ p ≤ ∞`, or the max-partial-sum norm built from an atom list
//! that dilations use. Weighted ℓᵖ doubles as the sequence space in which
//! frame coefficients live: its coordinate functionals are continuous, which
//! is all that is asked of a coefficient space.

use std::fmt;
use std::ops::{Add, Deref, Index, Sub};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exponent of an ℓᵖ norm. `∞` is its own variant rather than a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn is(&self, p: f64) -> bool {
        matches!(self, Exponent::Finite(q) if *q == p)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(p) => Ok(Exponent::Finite(p)),
            Repr::Str(s) if s == "inf" || s == "infinity" => Ok(Exponent::Infinity),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "exponent must be a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Max-partial-sum norm `‖a ⊕ y‖ = max(max_n ‖Σ_{k≤n} a_k τ_k‖, ‖y‖₂)`.
///
/// The leading `atoms.len()` coordinates are coefficients against the atoms
/// (measured in `ambient`); the trailing `l2_tail` coordinates form a
/// Euclidean factor joined by the max direct-sum norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialSumNorm {
    pub atoms: Vec<Vec<f64>>,
    pub ambient: NormedSpace,
    #[serde(default)]
    pub l2_tail: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormDescriptor {
    Lp {
        p: Exponent,
        weights: Option<Vec<f64>>,
    },
    PartialSum(Arc<PartialSumNorm>),
}

impl NormDescriptor {
    pub fn lp(p: Exponent) -> Self {
        NormDescriptor::Lp { p, weights: None }
    }

    /// Exponent when this is an unweighted ℓᵖ norm.
    pub fn unweighted_exponent(&self) -> Option<Exponent> {
        match self {
            NormDescriptor::Lp { p, weights: None } => Some(*p),
            _ => None,
        }
    }
}

/// `ℝ^dim` together with a norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormedSpace {
    dim: usize,
    norm: NormDescriptor,
}

impl NormedSpace {
    pub fn new(dim: usize, norm: NormDescriptor) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNorm("dimension must be at least 1".into()));
        }
        match &norm {
            NormDescriptor::Lp { p, weights } => {
                if let Exponent::Finite(p) = p {
                    if !(p.is_finite() && *p >= 1.0) {
                        return Err(Error::InvalidNorm(format!(
                            "exponent p = {p} is not in [1, ∞]"
                        )));
                    }
                }
                if let Some(w) = weights {
                    if w.len() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: w.len(),
                        });
                    }
                    if let Some(bad) = w.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                        return Err(Error::InvalidNorm(format!("weight {bad} is not positive")));
                    }
                }
            }
            NormDescriptor::PartialSum(ps) => {
                let expected = ps.atoms.len() + ps.l2_tail;
                if expected != dim {
                    return Err(Error::DimensionMismatch {
                        expected,
                        found: dim,
                    });
                }
                for atom in &ps.atoms {
                    if atom.len() != ps.ambient.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: ps.ambient.dim(),
                            found: atom.len(),
                        });
                    }
                }
            }
        }
        Ok(NormedSpace { dim, norm })
    }

    pub fn lp(dim: usize, p: Exponent) -> Result<Self> {
        Self::new(dim, NormDescriptor::lp(p))
    }

    pub fn weighted(dim: usize, p: Exponent, weights: Vec<f64>) -> Result<Self> {
        Self::new(
            dim,
            NormDescriptor::Lp {
                p,
                weights: Some(weights),
            },
        )
    }

    /// Unweighted Euclidean space.
    pub fn euclidean(dim: usize) -> Self {
        Self::lp(dim, Exponent::Finite(2.0)).expect("dim must be positive")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_descriptor(&self) -> &NormDescriptor {
        &self.norm
    }

    pub fn zero(&self) -> Vector {
        Vector(vec![0.0; self.dim])
    }

    pub fn basis_vector(&self, i: usize) -> Vector {
        let mut v = self.zero();
        v.0[i] = 1.0;
        v
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `(Σ wᵢ|vᵢ|ᵖ)^{1/p}`, `maxᵢ wᵢ|vᵢ|` for `p = ∞`, or the partial-sum norm.
    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        Ok(match &self.norm {
            NormDescriptor::Lp { p, weights } => lp_norm(v, *p, weights.as_deref()),
            NormDescriptor::PartialSum(ps) => partial_sum_norm(ps, v)?,
        })
    }

    pub fn distance(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        self.norm(&diff)
    }

    /// Zero-pads a finite coefficient list into this space.
    pub fn seq_embed(&self, coeffs: &[f64]) -> Result<Vector> {
        if coeffs.len() > self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: coeffs.len(),
            });
        }
        let mut v = self.zero();
        v.0[..coeffs.len()].copy_from_slice(coeffs);
        Ok(v)
    }

    /// Wraps coordinates after checking the dimension and finiteness.
    pub fn vector(&self, coords: Vec<f64>) -> Result<Vector> {
        self.check(&coords)?;
        Vector::new(coords)
    }
}

fn lp_norm(v: &[f64], p: Exponent, weights: Option<&[f64]>) -> f64 {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    match p {
        Exponent::Infinity => v
            .iter()
            .enumerate()
            .map(|(i, x)| w(i) * x.abs())
            .fold(0.0, f64::max),
        Exponent::Finite(p) if p == 1.0 => v.iter().enumerate().map(|(i, x)| w(i) * x.abs()).sum(),
        Exponent::Finite(p) if p == 2.0 && weights.is_none() => {
            let sq: f64 = v.iter().map(|x| x * x).sum();
            // fall back to the scaled sum when squares overflow or underflow
            if sq.is_finite() && sq > f64::MIN_POSITIVE / f64::EPSILON {
                sq.sqrt()
            } else {
                lp_norm(v, Exponent::Finite(2.0), Some(&vec![1.0; v.len()]))
            }
        }
        Exponent::Finite(p) => {
            // Scale by the largest weighted entry so |x|^p cannot overflow.
            let scaled = |i: usize, x: &f64| match weights {
                Some(w) => w[i].powf(1.0 / p) * x.abs(),
                None => x.abs(),
            };
            let m = v.iter().enumerate().map(|(i, x)| scaled(i, x)).fold(0.0, f64::max);
            if m == 0.0 {
                return 0.0;
            }
            let terms = v.iter().enumerate().map(|(i, x)| scaled(i, x) / m);
            if p == 2.0 {
                m * terms.map(|x| x * x).sum::<f64>().sqrt()
            } else {
                m * terms.map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}

fn partial_sum_norm(ps: &PartialSumNorm, v: &[f64]) -> Result<f64> {
    let n = ps.atoms.len();
    let mut acc = vec![0.0; ps.ambient.dim()];
    let mut best: f64 = 0.0;
    for (a, atom) in v[..n].iter().zip(&ps.atoms) {
        for (s, t) in acc.iter_mut().zip(atom) {
            *s += a * t;
        }
        best = best.max(ps.ambient.norm(&acc)?);
    }
    let tail = lp_norm(&v[n..], Exponent::Finite(2.0), None);
    Ok(best.max(tail))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceRepr {
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partial_sums: Option<PartialSumNorm>,
}

impl Serialize for NormedSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match &self.norm {
            NormDescriptor::Lp { p, weights } => SpaceRepr {
                dim: self.dim,
                p: Some(*p),
                weights: weights.clone(),
                partial_sums: None,
            },
            NormDescriptor::PartialSum(ps) => SpaceRepr {
                dim: self.dim,
                p: None,
                weights: None,
                partial_sums: Some((**ps).clone()),
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NormedSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SpaceRepr::deserialize(d)?;
        let norm = match (r.p, r.partial_sums) {
            (Some(p), None) => NormDescriptor::Lp {
                p,
                weights: r.weights,
            },
            (None, Some(ps)) if r.weights.is_none() => NormDescriptor::PartialSum(Arc::new(ps)),
            (None, None) => NormDescriptor::lp(Exponent::Finite(2.0)),
            _ => {
                return Err(serde::de::Error::custom(
                    "space must give either `p` (with optional `weights`) or `partial_sums`",
                ))
            }
        };
        NormedSpace::new(r.dim, norm).map_err(serde::de::Error::custom)
    }
}

/// Coordinates of a point. Which space it lives in is decided by the caller;
/// every norm-taking operation checks the dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(index) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Vector(coords))
    }

    /// No finiteness check; for internal arithmetic on already-valid data.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Vector(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|x| c * x).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.len(), rhs.len());
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.len(), rhs.len());
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}
