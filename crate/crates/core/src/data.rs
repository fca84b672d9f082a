//! Domain types: support points, distributions, data objects, weighted
//! datasets, and ground metrics, plus dataset validation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance inside which probability vectors are renormalized instead of
/// rejected.
pub const PROB_SUM_TOL: f64 = 1e-6;
/// Tolerance the probability-sum invariant is held to after validation.
pub const PROB_SUM_STRICT: f64 = 1e-9;

/// One support of a discrete distribution: either a point in R^d or an
/// index into a shared symbol alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SupportPoint {
    Numeric(Vec<f64>),
    Symbol(usize),
}

impl SupportPoint {
    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            SupportPoint::Numeric(v) => Some(v),
            SupportPoint::Symbol(_) => None,
        }
    }

    pub fn symbol(&self) -> Option<usize> {
        match self {
            SupportPoint::Numeric(_) => None,
            SupportPoint::Symbol(s) => Some(*s),
        }
    }
}

/// A bag of weighted vectors: support points with probability masses
/// summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub supports: Vec<SupportPoint>,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn new(supports: Vec<SupportPoint>, probs: Vec<f64>) -> Self {
        Distribution { supports, probs }
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    /// Uniform distribution over the given supports.
    pub fn uniform(supports: Vec<SupportPoint>) -> Self {
        let t = supports.len();
        Distribution {
            supports,
            probs: vec![1.0 / t as f64; t],
        }
    }
}

/// Structural shape of one super-dimension across a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DistShape {
    Numeric { dim: usize },
    Symbolic { alphabet: usize },
}

/// An object to cluster: a tuple of distributions (super-dimensions)
/// plus an identifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataObject {
    pub id: String,
    pub dists: Vec<Distribution>,
}

impl DataObject {
    pub fn new(id: impl Into<String>, dists: Vec<Distribution>) -> Self {
        DataObject {
            id: id.into(),
            dists,
        }
    }

    /// Single super-dimension convenience constructor.
    pub fn single(id: impl Into<String>, dist: Distribution) -> Self {
        DataObject::new(id, vec![dist])
    }
}

/// A validated dataset: objects plus strictly positive weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedDataset {
    pub objects: Vec<DataObject>,
    pub weights: Vec<f64>,
    /// Per-super-dimension shape shared by every object.
    pub shape: Vec<DistShape>,
}

impl WeightedDataset {
    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn super_dims(&self) -> usize {
        self.shape.len()
    }
}

/// Ground cost between two support points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GroundMetric {
    /// Squared Euclidean distance between numeric supports.
    SquaredEuclidean,
    /// Symmetric, zero-diagonal cost matrix over a symbol alphabet.
    SymbolicMatrix(SymbolMatrix),
}

/// Validated symmetric cost matrix over an alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl SymbolMatrix {
    pub fn new(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::InvalidMetric(format!(
                "matrix has {} entries, expected {}",
                entries.len(),
                size * size
            )));
        }
        for r in 0..size {
            for c in 0..size {
                let v = entries[r * size + c];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "entry ({r},{c}) = {v} is not a finite non-negative number"
                    )));
                }
                if (v - entries[c * size + r]).abs() > 1e-12 {
                    return Err(Error::InvalidMetric(format!(
                        "matrix not symmetric at ({r},{c})"
                    )));
                }
            }
            if entries[r * size + r] != 0.0 {
                return Err(Error::InvalidMetric(format!(
                    "diagonal entry ({r},{r}) = {} is not zero",
                    entries[r * size + r]
                )));
            }
        }
        Ok(SymbolMatrix { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.size + b]
    }
}

impl GroundMetric {
    /// Ground cost between two support points. Callers are responsible for
    /// structural compatibility; mixing numeric and symbolic supports (or a
    /// symbol outside the alphabet) is a caller bug.
    pub fn cost(&self, a: &SupportPoint, b: &SupportPoint) -> f64 {
        match (self, a, b) {
            (GroundMetric::SquaredEuclidean, SupportPoint::Numeric(x), SupportPoint::Numeric(y)) => {
                debug_assert_eq!(x.len(), y.len());
                x.iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum()
            }
            (GroundMetric::SymbolicMatrix(m), SupportPoint::Symbol(x), SupportPoint::Symbol(y)) => {
                m.get(*x, *y)
            }
            _ => panic!("ground metric applied to incompatible support points"),
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, GroundMetric::SymbolicMatrix(_))
    }
}

fn shape_of(point: &SupportPoint) -> DistShape {
    match point {
        SupportPoint::Numeric(v) => DistShape::Numeric { dim: v.len() },
        SupportPoint::Symbol(s) => DistShape::Symbolic { alphabet: s + 1 },
    }
}

fn shapes_compatible(a: DistShape, b: DistShape) -> bool {
    match (a, b) {
        (DistShape::Numeric { dim: x }, DistShape::Numeric { dim: y }) => x == y,
        (DistShape::Symbolic { .. }, DistShape::Symbolic { .. }) => true,
        _ => false,
    }
}

fn merge_shape(a: DistShape, b: DistShape) -> DistShape {
    match (a, b) {
        (DistShape::Symbolic { alphabet: x }, DistShape::Symbolic { alphabet: y }) => {
            DistShape::Symbolic {
                alphabet: x.max(y),
            }
        }
        _ => a,
    }
}

fn validate_distribution(id: &str, dist: &Distribution) -> Result<Distribution> {
    if dist.supports.is_empty() {
        return Err(Error::InvalidObject {
            id: id.to_string(),
            reason: "distribution has no supports".into(),
        });
    }
    if dist.supports.len() != dist.probs.len() {
        return Err(Error::InvalidObject {
            id: id.to_string(),
            reason: format!(
                "{} supports but {} probs",
                dist.supports.len(),
                dist.probs.len()
            ),
        });
    }
    for &p in &dist.probs {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidObject {
                id: id.to_string(),
                reason: format!("negative or non-finite prob {p}"),
            });
        }
    }
    for s in &dist.supports {
        if let SupportPoint::Numeric(v) = s {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidObject {
                    id: id.to_string(),
                    reason: "non-finite coordinate".into(),
                });
            }
        }
    }
    let sum: f64 = dist.probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidObject {
            id: id.to_string(),
            reason: format!("prob sum {sum}"),
        });
    }
    // Prune zero-probability supports; they only inflate LP size.
    let mut supports = Vec::with_capacity(dist.supports.len());
    let mut probs = Vec::with_capacity(dist.probs.len());
    for (s, &p) in dist.supports.iter().zip(&dist.probs) {
        if p > 0.0 {
            supports.push(s.clone());
            probs.push(p);
        }
    }
    if supports.is_empty() {
        return Err(Error::InvalidObject {
            id: id.to_string(),
            reason: "all probs zero".into(),
        });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_STRICT {
        for p in &mut probs {
            *p /= sum;
        }
    }
    Ok(Distribution { supports, probs })
}

/// Validate raw objects and weights into a [`WeightedDataset`].
///
/// Probabilities within [`PROB_SUM_TOL`] of one are renormalized; anything
/// farther off is rejected so data bugs stay visible. Zero-probability
/// supports are pruned. Validation is idempotent.
pub fn validate_dataset(objects: Vec<DataObject>, weights: Vec<f64>) -> Result<WeightedDataset> {
    if objects.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if objects.len() != weights.len() {
        return Err(Error::InvalidConfig(format!(
            "{} objects but {} weights",
            objects.len(),
            weights.len()
        )));
    }
    let super_dims = objects[0].dists.len();
    if super_dims == 0 {
        return Err(Error::InvalidObject {
            id: objects[0].id.clone(),
            reason: "object has no distributions".into(),
        });
    }
    let mut shape: Vec<Option<DistShape>> = vec![None; super_dims];
    let mut validated = Vec::with_capacity(objects.len());
    for (obj, &w) in objects.iter().zip(&weights) {
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::InvalidObject {
                id: obj.id.clone(),
                reason: format!("non-positive weight {w}"),
            });
        }
        if obj.dists.len() != super_dims {
            return Err(Error::InvalidObject {
                id: obj.id.clone(),
                reason: format!(
                    "{} super-dimensions, expected {super_dims}",
                    obj.dists.len()
                ),
            });
        }
        let mut dists = Vec::with_capacity(super_dims);
        for (s, dist) in obj.dists.iter().enumerate() {
            let clean = validate_distribution(&obj.id, dist)?;
            for point in &clean.supports {
                let ps = shape_of(point);
                match shape[s] {
                    None => shape[s] = Some(ps),
                    Some(existing) => {
                        if !shapes_compatible(existing, ps) {
                            return Err(Error::InvalidObject {
                                id: obj.id.clone(),
                                reason: format!(
                                    "support shape {ps:?} conflicts with {existing:?} in super-dimension {s}"
                                ),
                            });
                        }
                        shape[s] = Some(merge_shape(existing, ps));
                    }
                }
            }
            dists.push(clean);
        }
        validated.push(DataObject {
            id: obj.id.clone(),
            dists,
        });
    }
    let shape = shape.into_iter().map(|s| s.unwrap()).collect();
    Ok(WeightedDataset {
        objects: validated,
        weights,
        shape,
    })
}

/// Check that a set of ground metrics matches a dataset's shape.
pub fn check_metrics(dataset: &WeightedDataset, metrics: &[GroundMetric]) -> Result<()> {
    if metrics.len() != dataset.shape.len() {
        return Err(Error::SuperDimensionMismatch {
            left: dataset.shape.len(),
            right: metrics.len(),
        });
    }
    for (s, (shape, metric)) in dataset.shape.iter().zip(metrics).enumerate() {
        match (shape, metric) {
            (DistShape::Numeric { .. }, GroundMetric::SquaredEuclidean) => {}
            (DistShape::Symbolic { alphabet }, GroundMetric::SymbolicMatrix(m)) => {
                if m.size() < *alphabet {
                    return Err(Error::InvalidMetric(format!(
                        "super-dimension {s}: alphabet needs {alphabet} symbols, matrix has {}",
                        m.size()
                    )));
                }
            }
            _ => {
                return Err(Error::InvalidMetric(format!(
                    "super-dimension {s}: metric kind does not match data shape"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(id: &str, probs: Vec<f64>) -> DataObject {
        let supports = (0..probs.len())
            .map(|i| SupportPoint::Numeric(vec![i as f64]))
            .collect();
        DataObject::single(id, Distribution::new(supports, probs))
    }

    #[test]
    fn accepts_normalized_probs_unchanged() {
        let ds = validate_dataset(vec![obj("a", vec![0.5, 0.5])], vec![1.0]).unwrap();
        assert_eq!(ds.objects[0].dists[0].probs, vec![0.5, 0.5]);
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let ds = validate_dataset(vec![obj("a", vec![0.5, 0.5000004])], vec![1.0]).unwrap();
        let sum: f64 = ds.objects[0].dists[0].probs.iter().sum();
        assert!((sum - 1.0).abs() <= PROB_SUM_STRICT);
    }

    #[test]
    fn rejects_bad_prob_sum() {
        let err = validate_dataset(vec![obj("a", vec![0.7, 0.2])], vec![1.0]).unwrap_err();
        match err {
            Error::InvalidObject { id, reason } => {
                assert_eq!(id, "a");
                let sum: f64 = reason.strip_prefix("prob sum ").unwrap().parse().unwrap();
                assert!((sum - 0.9).abs() < 1e-12, "{reason}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn prunes_zero_probability_supports() {
        let ds = validate_dataset(vec![obj("a", vec![0.5, 0.0, 0.5])], vec![1.0]).unwrap();
        let d = &ds.objects[0].dists[0];
        assert_eq!(d.len(), 2);
        let sum: f64 = d.probs.iter().sum();
        assert!((sum - 1.0).abs() <= PROB_SUM_STRICT);
    }

    #[test]
    fn validation_is_idempotent() {
        let ds = validate_dataset(
            vec![obj("a", vec![0.3, 0.0, 0.7000003]), obj("b", vec![1.0])],
            vec![1.0, 2.0],
        )
        .unwrap();
        let again = validate_dataset(ds.objects.clone(), ds.weights.clone()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let a = DataObject::single(
            "a",
            Distribution::new(vec![SupportPoint::Numeric(vec![0.0, 0.0])], vec![1.0]),
        );
        let b = DataObject::single(
            "b",
            Distribution::new(vec![SupportPoint::Numeric(vec![0.0])], vec![1.0]),
        );
        assert!(validate_dataset(vec![a, b], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_mixed_support_kinds() {
        let a = DataObject::single(
            "a",
            Distribution::new(vec![SupportPoint::Numeric(vec![0.0])], vec![1.0]),
        );
        let b = DataObject::single(
            "b",
            Distribution::new(vec![SupportPoint::Symbol(0)], vec![1.0]),
        );
        assert!(validate_dataset(vec![a, b], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_non_positive_weight() {
        let err = validate_dataset(vec![obj("a", vec![1.0])], vec![0.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidObject { .. }));
    }

    #[test]
    fn symbol_matrix_rejects_asymmetry() {
        assert!(SymbolMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(SymbolMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
    }
}
