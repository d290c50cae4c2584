//! Evaluable maps between normed spaces and sampled Lipschitz estimates.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::perturb::{self, ReferenceMap, SolverConfig};
use crate::sampling::SamplerConfig;
use crate::spaces::{Exponent, NormedSpace, Vector};

/// Built-in componentwise scalar maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `x + eps·tanh(beta·x)`
    Tanh { eps: f64, beta: f64 },
    /// `x + eps·sin(beta·x)`
    Sin { eps: f64, beta: f64 },
    /// `sign(x)·max(|x| - threshold, 0)`
    SoftThreshold { threshold: f64 },
}

impl Family {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Family::Tanh { eps, beta } => x + eps * (beta * x).tanh(),
            Family::Sin { eps, beta } => x + eps * (beta * x).sin(),
            Family::SoftThreshold { threshold } => x.signum() * (x.abs() - threshold).max(0.0),
        }
    }

    /// Exact range `[min, max]` of the derivative, so that on any weighted ℓᵖ
    /// space `min·d(x,y) ≤ ‖φx − φy‖ ≤ max·d(x,y)` whenever `min ≥ 0`.
    pub fn slope_range(&self) -> (f64, f64) {
        match *self {
            Family::Tanh { eps, beta } | Family::Sin { eps, beta } => {
                let k = eps * beta;
                let lo = if matches!(self, Family::Sin { .. }) {
                    1.0 - k.abs()
                } else {
                    (1.0 + k).min(1.0)
                };
                let hi = if matches!(self, Family::Sin { .. }) {
                    1.0 + k.abs()
                } else {
                    (1.0 + k).max(1.0)
                };
                (lo, hi)
            }
            Family::SoftThreshold { .. } => (0.0, 1.0),
        }
    }

    /// Lipschitz constant of `φ − id`.
    pub fn deviation_lipschitz(&self) -> f64 {
        match *self {
            Family::Tanh { eps, beta } | Family::Sin { eps, beta } => (eps * beta).abs(),
            Family::SoftThreshold { .. } => 1.0,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Family::Tanh { .. } => "tanh",
            Family::Sin { .. } => "sin",
            Family::SoftThreshold { .. } => "soft-threshold",
        }
    }

    fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match *self {
            Family::Tanh { eps, beta } | Family::Sin { eps, beta } => {
                m.insert("eps".into(), eps);
                m.insert("beta".into(), beta);
            }
            Family::SoftThreshold { threshold } => {
                m.insert("threshold".into(), threshold);
            }
        }
        m
    }

    fn from_parts(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |k: &str| {
            params
                .get(k)
                .copied()
                .ok_or_else(|| Error::Parse(format!("family `{name}` needs parameter `{k}`")))
        };
        let allowed: &[&str] = match name {
            "tanh" | "sin" => &["eps", "beta"],
            "soft-threshold" => &["threshold"],
            other => return Err(Error::Parse(format!("unknown family `{other}`"))),
        };
        if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Parse(format!("family `{name}` has no parameter `{extra}`")));
        }
        Ok(match name {
            "tanh" => Family::Tanh {
                eps: get("eps")?,
                beta: get("beta")?,
            },
            "sin" => Family::Sin {
                eps: get("eps")?,
                beta: get("beta")?,
            },
            _ => Family::SoftThreshold {
                threshold: get("threshold")?,
            },
        })
    }
}

type Evaluator = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Cache of solved preimages keyed by the bit pattern of the input.
pub(crate) type InverseCache = Arc<RwLock<HashMap<Vec<u64>, Vector>>>;

/// Lazily inverted map: evaluating it at `y` runs a certified inversion of
/// `target` against the reference map.
#[derive(Clone)]
pub struct InverseSpec {
    pub target: MapHandle,
    pub reference: ReferenceMap,
    pub lambda1: f64,
    pub lambda2: f64,
    pub solver: SolverConfig,
    cache: InverseCache,
}

impl InverseSpec {
    pub fn new(
        target: MapHandle,
        reference: ReferenceMap,
        lambda1: f64,
        lambda2: f64,
        solver: SolverConfig,
    ) -> Self {
        InverseSpec {
            target,
            reference,
            lambda1,
            lambda2,
            solver,
            cache: Arc::default(),
        }
    }

    pub fn cached_len(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }
}

#[derive(Clone)]
pub enum MapKind {
    Affine { matrix: Matrix, offset: Vec<f64> },
    Componentwise(Family),
    /// Applied in list order: the first child acts first.
    Composite(Vec<MapHandle>),
    /// Scalar-valued children stacked into the leading codomain coordinates.
    Stack(Vec<MapHandle>),
    /// `x ↦ Σ cᵢ·mᵢ(x)`
    Combination(Vec<(f64, MapHandle)>),
    InverseOf(Box<InverseSpec>),
    Custom { name: String, eval: Evaluator },
}

struct MapInner {
    domain: NormedSpace,
    codomain: NormedSpace,
    kind: MapKind,
}

/// Cheaply clonable, immutable map between two normed spaces.
#[derive(Clone)]
pub struct MapHandle(Arc<MapInner>);

impl fmt::Debug for MapHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.0.kind {
            MapKind::Affine { .. } => "affine",
            MapKind::Componentwise(fam) => fam.name(),
            MapKind::Composite(_) => "composite",
            MapKind::Stack(_) => "stack",
            MapKind::Combination(_) => "combination",
            MapKind::InverseOf(_) => "inverse-of",
            MapKind::Custom { name, .. } => name,
        };
        write!(
            f,
            "MapHandle({kind}: ℝ^{} → ℝ^{})",
            self.0.domain.dim(),
            self.0.codomain.dim()
        )
    }
}

impl MapHandle {
    fn build(domain: NormedSpace, codomain: NormedSpace, kind: MapKind) -> Self {
        MapHandle(Arc::new(MapInner {
            domain,
            codomain,
            kind,
        }))
    }

    pub fn affine(
        domain: NormedSpace,
        codomain: NormedSpace,
        matrix: Matrix,
        offset: Vec<f64>,
    ) -> Result<Self> {
        if matrix.cols() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: matrix.cols(),
            });
        }
        if matrix.rows() != codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: codomain.dim(),
                found: matrix.rows(),
            });
        }
        codomain.check(&offset)?;
        if matrix.as_slice().iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::Parse("affine map has non-finite entries".into()));
        }
        Ok(Self::build(
            domain,
            codomain,
            MapKind::Affine { matrix, offset },
        ))
    }

    pub fn linear(domain: NormedSpace, codomain: NormedSpace, matrix: Matrix) -> Result<Self> {
        let zero = vec![0.0; codomain.dim()];
        Self::affine(domain, codomain, matrix, zero)
    }

    pub fn identity(space: &NormedSpace) -> Self {
        Self::linear(space.clone(), space.clone(), Matrix::identity(space.dim()))
            .expect("square identity")
    }

    pub fn scalar_multiple(space: &NormedSpace, c: f64) -> Self {
        Self::linear(
            space.clone(),
            space.clone(),
            Matrix::identity(space.dim()).scaled(c),
        )
        .expect("square")
    }

    /// `x ↦ ⟨row, x⟩ + offset` into `ℝ¹`.
    pub fn functional(domain: &NormedSpace, row: &[f64], offset: f64) -> Result<Self> {
        let m = Matrix::from_row_major(1, row.len(), row.to_vec())?;
        Self::affine(domain.clone(), NormedSpace::euclidean(1), m, vec![offset])
    }

    pub fn componentwise(space: &NormedSpace, family: Family) -> Self {
        Self::build(space.clone(), space.clone(), MapKind::Componentwise(family))
    }

    /// Composition applying `maps[0]` first.
    pub fn compose(maps: Vec<MapHandle>) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::Parse("empty composition".into()))?;
        for w in maps.windows(2) {
            if w[0].codomain().dim() != w[1].domain().dim() {
                return Err(Error::DimensionMismatch {
                    expected: w[0].codomain().dim(),
                    found: w[1].domain().dim(),
                });
            }
        }
        let domain = first.domain().clone();
        let codomain = maps.last().expect("nonempty").codomain().clone();
        Ok(Self::build(domain, codomain, MapKind::Composite(maps)))
    }

    pub fn then(&self, next: &MapHandle) -> Result<Self> {
        Self::compose(vec![self.clone(), next.clone()])
    }

    pub fn stack(domain: &NormedSpace, codomain: &NormedSpace, parts: Vec<MapHandle>) -> Result<Self> {
        if parts.len() > codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: codomain.dim(),
                found: parts.len(),
            });
        }
        for p in &parts {
            if p.codomain().dim() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    found: p.codomain().dim(),
                });
            }
            if p.domain().dim() != domain.dim() {
                return Err(Error::DimensionMismatch {
                    expected: domain.dim(),
                    found: p.domain().dim(),
                });
            }
        }
        Ok(Self::build(domain.clone(), codomain.clone(), MapKind::Stack(parts)))
    }

    pub fn combination(terms: Vec<(f64, MapHandle)>) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::Parse("empty combination".into()))?;
        let (d, c) = (first.domain().clone(), first.codomain().clone());
        for (_, m) in &terms {
            if m.domain().dim() != d.dim() || m.codomain().dim() != c.dim() {
                return Err(Error::DimensionMismatch {
                    expected: d.dim(),
                    found: m.domain().dim(),
                });
            }
        }
        Ok(Self::build(d, c, MapKind::Combination(terms)))
    }

    pub fn inverse_of(spec: InverseSpec) -> Self {
        let domain = spec.target.codomain().clone();
        let codomain = spec.target.domain().clone();
        Self::build(domain, codomain, MapKind::InverseOf(Box::new(spec)))
    }

    /// Code-only map; cannot be serialized.
    pub fn custom<F>(name: &str, domain: NormedSpace, codomain: NormedSpace, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::build(
            domain,
            codomain,
            MapKind::Custom {
                name: name.to_string(),
                eval: Arc::new(f),
            },
        )
    }

    pub fn domain(&self) -> &NormedSpace {
        &self.0.domain
    }

    pub fn codomain(&self) -> &NormedSpace {
        &self.0.codomain
    }

    pub fn kind(&self) -> &MapKind {
        &self.0.kind
    }

    pub fn as_affine(&self) -> Option<(&Matrix, &[f64])> {
        match &self.0.kind {
            MapKind::Affine { matrix, offset } => Some((matrix, offset)),
            _ => None,
        }
    }

    /// True for affine maps with zero offset.
    pub fn is_linear(&self) -> bool {
        self.as_affine()
            .is_some_and(|(_, c)| c.iter().all(|&v| v == 0.0))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vector> {
        self.0.domain.check(x)?;
        let out = self.eval_unchecked(x)?;
        if out.len() != self.0.codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.0.codomain.dim(),
                found: out.len(),
            });
        }
        Vector::new(out)
    }

    fn eval_unchecked(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.0.kind {
            MapKind::Affine { matrix, offset } => {
                let mut y = matrix.mul_vec(x)?;
                y.iter_mut().zip(offset).for_each(|(a, c)| *a += c);
                Ok(y)
            }
            MapKind::Componentwise(f) => Ok(x.iter().map(|&v| f.apply(v)).collect()),
            MapKind::Composite(maps) => {
                let mut cur = x.to_vec();
                for m in maps {
                    cur = m.evaluate(&cur)?.into_inner();
                }
                Ok(cur)
            }
            MapKind::Stack(parts) => {
                let mut out = vec![0.0; self.0.codomain.dim()];
                for (slot, p) in out.iter_mut().zip(parts) {
                    *slot = p.evaluate(x)?[0];
                }
                Ok(out)
            }
            MapKind::Combination(terms) => {
                let mut out = vec![0.0; self.0.codomain.dim()];
                for (c, m) in terms {
                    let y = m.evaluate(x)?;
                    out.iter_mut().zip(y.iter()).for_each(|(o, v)| *o += c * v);
                }
                Ok(out)
            }
            MapKind::InverseOf(spec) => {
                let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
                if let Some(hit) = spec.cache.read().ok().and_then(|c| c.get(&key).cloned()) {
                    return Ok(hit.into_inner());
                }
                let y = Vector::new(x.to_vec())?;
                let cert = perturb::invert_with_constants(
                    &spec.target,
                    &y,
                    &spec.reference,
                    spec.lambda1,
                    spec.lambda2,
                    &spec.solver,
                )?;
                if let Ok(mut c) = spec.cache.write() {
                    c.insert(key, cert.solution.clone());
                }
                Ok(cert.solution.into_inner())
            }
            MapKind::Custom { eval, .. } => Ok(eval(x)),
        }
    }

    /// Describes the map as JSON data; fails for custom evaluators.
    pub fn descriptor(&self) -> Result<MapDescriptor> {
        let mut d = MapDescriptor::bare(
            match &self.0.kind {
                MapKind::Affine { .. } => "affine",
                MapKind::Componentwise(_) => "componentwise",
                MapKind::Composite(_) => "composite",
                MapKind::Stack(_) => "stack",
                MapKind::Combination(_) => "combination",
                MapKind::InverseOf(_) => "inverse-of",
                MapKind::Custom { name, .. } => {
                    return Err(Error::Unsupported(format!(
                        "custom map `{name}` is code-only and cannot be serialized"
                    )))
                }
            },
            Some(self.0.domain.clone()),
            Some(self.0.codomain.clone()),
        );
        match &self.0.kind {
            MapKind::Affine { matrix, offset } => {
                d.matrix = Some(matrix.clone());
                d.offset = Some(offset.clone());
            }
            MapKind::Componentwise(f) => {
                d.family = Some(f.name().to_string());
                d.params = Some(f.params());
            }
            MapKind::Composite(ms) | MapKind::Stack(ms) => {
                d.children = Some(ms.iter().map(|m| m.descriptor()).collect::<Result<_>>()?);
            }
            MapKind::Combination(terms) => {
                d.coefficients = Some(terms.iter().map(|(c, _)| *c).collect());
                d.children = Some(
                    terms
                        .iter()
                        .map(|(_, m)| m.descriptor())
                        .collect::<Result<_>>()?,
                );
            }
            MapKind::InverseOf(spec) => {
                d.children = Some(vec![
                    spec.target.descriptor()?,
                    spec.reference.forward.descriptor()?,
                    spec.reference.inverse.descriptor()?,
                ]);
                let mut p = BTreeMap::new();
                p.insert("lambda1".into(), spec.lambda1);
                p.insert("lambda2".into(), spec.lambda2);
                p.insert("lip_reference_inverse".into(), spec.reference.lip_inverse);
                d.params = Some(p);
                d.solver = Some(spec.solver.clone());
            }
            MapKind::Custom { .. } => unreachable!(),
        }
        Ok(d)
    }
}

/// JSON form of a map: `{kind, domain?, codomain?, matrix?, offset?, family?,
/// params?, coefficients?, children?, solver?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDescriptor {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<NormedSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codomain: Option<NormedSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub children: Option<Vec<MapDescriptor>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
}

impl MapDescriptor {
    fn bare(kind: &str, domain: Option<NormedSpace>, codomain: Option<NormedSpace>) -> Self {
        MapDescriptor {
            kind: kind.to_string(),
            domain,
            codomain,
            matrix: None,
            offset: None,
            family: None,
            params: None,
            coefficients: None,
            children: None,
            solver: None,
        }
    }

    pub fn build(&self) -> Result<MapHandle> {
        let children = || -> Result<Vec<MapHandle>> {
            self.children
                .as_ref()
                .ok_or_else(|| Error::Parse(format!("`{}` map needs `children`", self.kind)))?
                .iter()
                .map(MapDescriptor::build)
                .collect()
        };
        match self.kind.as_str() {
            "affine" => {
                let matrix = self
                    .matrix
                    .clone()
                    .ok_or_else(|| Error::Parse("affine map needs `matrix`".into()))?;
                let domain = self
                    .domain
                    .clone()
                    .unwrap_or_else(|| NormedSpace::euclidean(matrix.cols().max(1)));
                let codomain = self
                    .codomain
                    .clone()
                    .unwrap_or_else(|| NormedSpace::euclidean(matrix.rows().max(1)));
                let offset = self
                    .offset
                    .clone()
                    .unwrap_or_else(|| vec![0.0; matrix.rows()]);
                MapHandle::affine(domain, codomain, matrix, offset)
            }
            "componentwise" => {
                let space = self
                    .domain
                    .clone()
                    .ok_or_else(|| Error::Parse("componentwise map needs `domain`".into()))?;
                let name = self
                    .family
                    .as_deref()
                    .ok_or_else(|| Error::Parse("componentwise map needs `family`".into()))?;
                let fam = Family::from_parts(name, &self.params.clone().unwrap_or_default())?;
                Ok(MapHandle::componentwise(&space, fam))
            }
            "composite" => MapHandle::compose(children()?),
            "stack" => {
                let parts = children()?;
                let domain = self
                    .domain
                    .clone()
                    .or_else(|| parts.first().map(|p| p.domain().clone()))
                    .ok_or_else(|| Error::Parse("stack map needs `domain`".into()))?;
                let codomain = self
                    .codomain
                    .clone()
                    .unwrap_or_else(|| NormedSpace::euclidean(parts.len().max(1)));
                MapHandle::stack(&domain, &codomain, parts)
            }
            "combination" => {
                let maps = children()?;
                let coeffs = self
                    .coefficients
                    .clone()
                    .ok_or_else(|| Error::Parse("combination map needs `coefficients`".into()))?;
                if coeffs.len() != maps.len() {
                    return Err(Error::Parse(
                        "combination: `coefficients` and `children` differ in length".into(),
                    ));
                }
                MapHandle::combination(coeffs.into_iter().zip(maps).collect())
            }
            "inverse-of" => {
                let ch = children()?;
                let [target, forward, inverse]: [MapHandle; 3] = ch.try_into().map_err(|_| {
                    Error::Parse("inverse-of needs children [target, reference, reference_inverse]".into())
                })?;
                let params = self.params.clone().unwrap_or_default();
                let get = |k: &str| {
                    params
                        .get(k)
                        .copied()
                        .ok_or_else(|| Error::Parse(format!("inverse-of needs parameter `{k}`")))
                };
                let reference = ReferenceMap::new(forward, inverse, get("lip_reference_inverse")?)?;
                Ok(MapHandle::inverse_of(InverseSpec::new(
                    target,
                    reference,
                    get("lambda1")?,
                    get("lambda2")?,
                    self.solver.clone().unwrap_or_default(),
                )))
            }
            "custom" => Err(Error::Unsupported(
                "custom maps are code-only and cannot be deserialized".into(),
            )),
            other => Err(Error::Parse(format!("unknown map kind `{other}`"))),
        }
    }
}

/// On-sample Lipschitz extrema of a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipEstimate {
    /// Largest sampled difference quotient; a lower bound for `Lip(m)`.
    pub lower: f64,
    /// Smallest sampled difference quotient; an upper estimate of the true
    /// bi-Lipschitz constant.
    pub bilip_lower: f64,
    pub pair_count: usize,
    pub sample_seed: u64,
}

pub fn lip_estimate(m: &MapHandle, sampler: &SamplerConfig) -> Result<LipEstimate> {
    let points = sampler.points(m.domain())?;
    if points.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "need at least two points, sampler produced {}",
            points.len()
        )));
    }
    let images = points
        .iter()
        .map(|p| m.evaluate(p))
        .collect::<Result<Vec<_>>>()?;
    let mut lower: f64 = 0.0;
    let mut bilip = f64::INFINITY;
    let mut count = 0;
    for (i, j) in sampler.pairs(points.len()) {
        let d = m.domain().distance(&points[i], &points[j])?;
        if d == 0.0 {
            continue;
        }
        let ratio = m.codomain().distance(&images[i], &images[j])? / d;
        lower = lower.max(ratio);
        bilip = bilip.min(ratio);
        count += 1;
    }
    if count == 0 {
        return Err(Error::DegenerateSample("all sampled points coincide".into()));
    }
    Ok(LipEstimate {
        lower,
        bilip_lower: bilip,
        pair_count: count,
        sample_seed: sampler.seed,
    })
}

/// Exact induced operator norm of an affine map's matrix for unweighted
/// `p ∈ {1, 2, ∞}` on both sides.
pub fn lip_exact_affine(m: &MapHandle) -> Result<f64> {
    let (matrix, _) = m
        .as_affine()
        .ok_or_else(|| Error::Unsupported("exact Lipschitz number needs an affine map".into()))?;
    let p = same_unweighted_exponent(m.domain(), m.codomain())?;
    matrix_operator_norm(matrix, p)
}

pub(crate) fn same_unweighted_exponent(a: &NormedSpace, b: &NormedSpace) -> Result<Exponent> {
    match (
        a.norm_descriptor().unweighted_exponent(),
        b.norm_descriptor().unweighted_exponent(),
    ) {
        (Some(p), Some(q)) if p == q => Ok(p),
        _ => Err(Error::Unsupported(
            "exact operator norm needs the same unweighted ℓᵖ norm on both sides".into(),
        )),
    }
}

pub fn matrix_operator_norm(matrix: &Matrix, p: Exponent) -> Result<f64> {
    match p {
        Exponent::Infinity => Ok(matrix.norm_inf()),
        Exponent::Finite(q) if q == 1.0 => Ok(matrix.norm_1()),
        Exponent::Finite(q) if q == 2.0 => Ok(matrix.spectral_norm()),
        Exponent::Finite(q) => Err(Error::Unsupported(format!(
            "exact operator norm for p = {q} (only 1, 2, ∞)"
        ))),
    }
}

/// `m̃(x) = m(x) − m(0)`, so that `m̃(0) = 0` with unchanged differences.
pub fn translate_to_origin(m: &MapHandle) -> Result<MapHandle> {
    if let Some((matrix, _)) = m.as_affine() {
        return MapHandle::linear(m.domain().clone(), m.codomain().clone(), matrix.clone());
    }
    let zero = m.domain().zero();
    let shift: Vec<f64> = m.evaluate(&zero)?.iter().map(|v| -v).collect();
    if shift.iter().all(|&v| v == 0.0) {
        return Ok(m.clone());
    }
    let cod = m.codomain();
    let translate = MapHandle::affine(cod.clone(), cod.clone(), Matrix::identity(cod.dim()), shift)?;
    MapHandle::compose(vec![m.clone(), translate])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize) -> NormedSpace {
        NormedSpace::euclidean(n)
    }

    #[test]
    fn evaluate_examples() {
        let id = MapHandle::identity(&e(2));
        assert_eq!(id.evaluate(&[3.0, 4.0]).unwrap().coords(), &[3.0, 4.0]);
        let a = MapHandle::affine(e(2), e(2), Matrix::identity(2).scaled(2.0), vec![1.0, 0.0]).unwrap();
        assert_eq!(a.evaluate(&[1.0, 1.0]).unwrap().coords(), &[3.0, 2.0]);
        // list order is application order: scale first, then shift
        let f = MapHandle::scalar_multiple(&e(1), 2.0);
        let g = MapHandle::affine(e(1), e(1), Matrix::identity(1), vec![1.0]).unwrap();
        let fg = MapHandle::compose(vec![f.clone(), g.clone()]).unwrap();
        assert_eq!(fg.evaluate(&[0.0]).unwrap().coords(), &[1.0]);
        assert_eq!(fg.evaluate(&[1.0]).unwrap().coords(), &[3.0]);
        let gf = MapHandle::compose(vec![g, f]).unwrap();
        assert_eq!(gf.evaluate(&[1.0]).unwrap().coords(), &[4.0]);
        assert!(id.evaluate(&[1.0]).is_err());
    }

    #[test]
    fn lip_estimate_examples() {
        let s = SamplerConfig::new(20, 3);
        let id = lip_estimate(&MapHandle::identity(&e(2)), &s).unwrap();
        assert!((id.lower - 1.0).abs() < 1e-15 && (id.bilip_lower - 1.0).abs() < 1e-15);

        let c = MapHandle::affine(e(2), e(2), Matrix::zeros(2, 2), vec![5.0, -1.0]).unwrap();
        let est = lip_estimate(&c, &s).unwrap();
        assert_eq!((est.lower, est.bilip_lower), (0.0, 0.0));

        // a sample containing both coordinate directions; singular values of
        // diag(1,2) are 1 and 2
        let d = MapHandle::linear(e(2), e(2), Matrix::diagonal(&[1.0, 2.0])).unwrap();
        let grid = SamplerConfig::new(9, 0).with_scheme(crate::sampling::Scheme::Grid);
        let est = lip_estimate(&d, &grid).unwrap();
        assert!((est.lower - 2.0).abs() < 1e-15);
        assert!(est.bilip_lower >= 1.0 - 1e-15);
        assert!(est.bilip_lower <= est.lower);
    }

    #[test]
    fn degenerate_sample_is_rejected() {
        let s = SamplerConfig::new(1, 0);
        assert!(matches!(
            lip_estimate(&MapHandle::identity(&e(2)), &s),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn exact_affine_examples() {
        assert_eq!(lip_exact_affine(&MapHandle::identity(&e(3))).unwrap(), 1.0);
        let inf = NormedSpace::lp(2, Exponent::Infinity).unwrap();
        let d = MapHandle::linear(inf.clone(), inf, Matrix::diagonal(&[3.0, -4.0])).unwrap();
        assert_eq!(lip_exact_affine(&d).unwrap(), 4.0);
        let l1 = NormedSpace::lp(2, Exponent::Finite(1.0)).unwrap();
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let a = MapHandle::linear(l1.clone(), l1, m).unwrap();
        assert_eq!(lip_exact_affine(&a).unwrap(), 2.0);

        let w = NormedSpace::weighted(2, Exponent::Finite(2.0), vec![1.0, 2.0]).unwrap();
        let wm = MapHandle::identity(&w);
        assert!(matches!(lip_exact_affine(&wm), Err(Error::Unsupported(_))));
        let p3 = NormedSpace::lp(2, Exponent::Finite(3.0)).unwrap();
        assert!(lip_exact_affine(&MapHandle::identity(&p3)).is_err());
        let tanh = MapHandle::componentwise(&e(2), Family::Tanh { eps: 0.1, beta: 1.0 });
        assert!(lip_exact_affine(&tanh).is_err());
    }

    #[test]
    fn translate_examples() {
        let a = MapHandle::affine(e(2), e(2), Matrix::identity(2), vec![1.0, 1.0]).unwrap();
        let t = translate_to_origin(&a).unwrap();
        assert_eq!(t.as_affine().unwrap().1, &[0.0, 0.0]);

        let lin = MapHandle::componentwise(&e(2), Family::Tanh { eps: 1.0, beta: 1.0 });
        let t = translate_to_origin(&lin).unwrap();
        let x = [0.3, -2.0];
        assert_eq!(t.evaluate(&x).unwrap(), lin.evaluate(&x).unwrap());

        // x ↦ x + tanh(x) + 5 in one dimension
        let shifted = MapHandle::compose(vec![
            MapHandle::componentwise(&e(1), Family::Tanh { eps: 1.0, beta: 1.0 }),
            MapHandle::affine(e(1), e(1), Matrix::identity(1), vec![5.0]).unwrap(),
        ])
        .unwrap();
        let t = translate_to_origin(&shifted).unwrap();
        assert_eq!(t.evaluate(&[0.0]).unwrap()[0], 0.0);
        let oracle = shifted.evaluate(&[1.0]).unwrap()[0] - shifted.evaluate(&[0.0]).unwrap()[0];
        assert_eq!(t.evaluate(&[1.0]).unwrap()[0], oracle);
        assert!((oracle - (1.0 + 1f64.tanh())).abs() < 1e-14);
    }

    #[test]
    fn descriptor_round_trip_and_custom_flag() {
        let m = MapHandle::compose(vec![
            MapHandle::componentwise(&e(2), Family::Sin { eps: 0.1, beta: 2.0 }),
            MapHandle::affine(e(2), e(2), Matrix::diagonal(&[1.0, 3.0]), vec![0.5, 0.0]).unwrap(),
        ])
        .unwrap();
        let json = serde_json::to_string(&m.descriptor().unwrap()).unwrap();
        let back: MapDescriptor = serde_json::from_str(&json).unwrap();
        let m2 = back.build().unwrap();
        let x = [0.7, -0.2];
        assert_eq!(m.evaluate(&x).unwrap(), m2.evaluate(&x).unwrap());

        let c = MapHandle::custom("square", e(1), e(1), |x| vec![x[0] * x[0]]);
        assert!(matches!(c.descriptor(), Err(Error::Unsupported(_))));
        let bad = r#"{"kind":"componentwise","domain":{"dim":1,"p":2},"family":"tanh","params":{"eps":1,"gamma":1}}"#;
        let d: MapDescriptor = serde_json::from_str(bad).unwrap();
        assert!(d.build().is_err());
    }

    #[test]
    fn family_slopes_bound_difference_quotients() {
        let fams = [
            Family::Tanh { eps: 0.3, beta: 2.0 },
            Family::Tanh { eps: -0.2, beta: 1.5 },
            Family::Sin { eps: 0.25, beta: 3.0 },
            Family::SoftThreshold { threshold: 0.4 },
        ];
        for f in fams {
            let (lo, hi) = f.slope_range();
            for k in 0..200 {
                let x = -3.0 + 0.031 * k as f64;
                let y = x + 0.0173 + 0.01 * (k % 7) as f64;
                let q = (f.apply(y) - f.apply(x)) / (y - x);
                assert!(q >= lo - 1e-12 && q <= hi + 1e-12, "{f:?} {q}");
            }
        }
    }
}
