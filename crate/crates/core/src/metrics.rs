//! Clustering comparison and quality measures: within-cluster dispersion,
//! the coupling-based distance between weighted centroid sets, the
//! categorical partition distance, and the Davies-Bouldin index.

use crate::d2::Assignment;
use crate::data::{DataObject, DistShape, GroundMetric, SupportPoint};
use crate::error::{Error, Result};
use crate::exec;
use crate::transport::{object_distance_sq, solve_transportation};

/// Mean squared combined distance from each object to its assigned
/// centroid.
pub fn mean_squared_dispersion(
    objects: &[DataObject],
    assignment: &Assignment,
    metrics: &[GroundMetric],
) -> Result<f64> {
    if objects.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dists = exec::par_try_map_indexed(objects, |i, obj| {
        object_distance_sq(obj, &assignment.centroids[assignment.labels[i]], metrics)
    })?;
    Ok(dists.iter().sum::<f64>() / objects.len() as f64)
}

/// Squared distance between two weighted centroid sets: the optimal
/// coupling of the squared combined distances under the cluster-proportion
/// marginals.
pub fn mm_distance_sq(
    za: &[DataObject],
    pa: &[f64],
    zb: &[DataObject],
    pb: &[f64],
    metrics: &[GroundMetric],
) -> Result<f64> {
    if za.is_empty() || zb.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pairs: Vec<(usize, usize)> = (0..za.len())
        .flat_map(|i| (0..zb.len()).map(move |j| (i, j)))
        .collect();
    let flat = exec::par_try_map_indexed(&pairs, |_, &(i, j)| {
        object_distance_sq(&za[i], &zb[j], metrics)
    })?;
    let cost: Vec<Vec<f64>> = flat.chunks(zb.len()).map(|row| row.to_vec()).collect();
    let (_, objective) = solve_transportation(pa, pb, &cost)?;
    Ok(objective)
}

/// Categorical clustering distance between two partitions of the same
/// ground set, given as label vectors. The element distance is the
/// symmetric-difference count between clusters (raw, not normalized by the
/// ground-set size) and the marginals are the cluster size proportions.
pub fn categorical_distance(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    if labels_a.len() != labels_b.len() || labels_a.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "partitions cover {} and {} elements",
            labels_a.len(),
            labels_b.len()
        )));
    }
    let n = labels_a.len();
    let ka = labels_a.iter().max().unwrap() + 1;
    let kb = labels_b.iter().max().unwrap() + 1;
    let mut size_a = vec![0usize; ka];
    let mut size_b = vec![0usize; kb];
    let mut inter = vec![0usize; ka * kb];
    for (&a, &b) in labels_a.iter().zip(labels_b) {
        size_a[a] += 1;
        size_b[b] += 1;
        inter[a * kb + b] += 1;
    }
    // Drop empty label slots so the marginals are strictly positive.
    let live_a: Vec<usize> = (0..ka).filter(|&i| size_a[i] > 0).collect();
    let live_b: Vec<usize> = (0..kb).filter(|&j| size_b[j] > 0).collect();
    let cost: Vec<Vec<f64>> = live_a
        .iter()
        .map(|&i| {
            live_b
                .iter()
                .map(|&j| (size_a[i] + size_b[j] - 2 * inter[i * kb + j]) as f64)
                .collect()
        })
        .collect();
    let pa: Vec<f64> = live_a.iter().map(|&i| size_a[i] as f64 / n as f64).collect();
    let pb: Vec<f64> = live_b.iter().map(|&j| size_b[j] as f64 / n as f64).collect();
    let (_, objective) = solve_transportation(&pa, &pb, &cost)?;
    Ok(objective)
}

/// Distance flavor used by the Davies-Bouldin index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbiDistance {
    /// Squared combined transportation distance.
    SquaredMallows,
    /// Squared Euclidean distance between probability vectors over a fixed
    /// symbol alphabet. Numeric-support data has no canonical flattening
    /// and is rejected.
    SquaredL2Flattened,
}

/// Davies-Bouldin report: the index plus any coincident centroid pairs
/// that forced an infinite ratio.
#[derive(Debug, Clone)]
pub struct DaviesBouldin {
    pub value: f64,
    pub coincident: Vec<(usize, usize)>,
}

fn flatten(obj: &DataObject, shape: &[DistShape]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (dist, s) in obj.dists.iter().zip(shape) {
        let alphabet = match s {
            DistShape::Symbolic { alphabet } => *alphabet,
            DistShape::Numeric { .. } => {
                return Err(Error::Unsupported(
                    "squared-L2 mode needs a fixed symbol alphabet; numeric supports have no canonical flattening".into(),
                ));
            }
        };
        let mut h = vec![0.0; alphabet];
        for (sp, &p) in dist.supports.iter().zip(&dist.probs) {
            match sp {
                SupportPoint::Symbol(sym) => h[*sym] += p,
                SupportPoint::Numeric(_) => {
                    return Err(Error::Unsupported(
                        "squared-L2 mode needs symbolic supports".into(),
                    ));
                }
            }
        }
        out.extend(h);
    }
    Ok(out)
}

fn sq_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Davies-Bouldin index: the average over clusters of the worst ratio of
/// summed intra-cluster dispersions to inter-centroid distance. Lower is
/// tighter. Coincident centroids make the ratio infinite; the offending
/// pairs are reported alongside.
pub fn davies_bouldin(
    objects: &[DataObject],
    assignment: &Assignment,
    metrics: &[GroundMetric],
    distance: DbiDistance,
    shape: &[DistShape],
) -> Result<DaviesBouldin> {
    let k = assignment.centroids.len();
    if k < 2 {
        return Err(Error::Unsupported(format!(
            "Davies-Bouldin needs at least 2 clusters, got {k}"
        )));
    }
    let d = |x: &DataObject, y: &DataObject| -> Result<f64> {
        match distance {
            DbiDistance::SquaredMallows => object_distance_sq(x, y, metrics),
            DbiDistance::SquaredL2Flattened => {
                Ok(sq_l2(&flatten(x, shape)?, &flatten(y, shape)?))
            }
        }
    };

    let mut sigma = vec![0.0f64; k];
    let mut counts = vec![0usize; k];
    for (obj, &l) in objects.iter().zip(&assignment.labels) {
        sigma[l] += d(obj, &assignment.centroids[l])?;
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] == 0 {
            return Err(Error::Unsupported(format!("cluster {j} is empty")));
        }
        sigma[j] /= counts[j] as f64;
    }

    let mut coincident = Vec::new();
    let mut total = 0.0;
    for j in 0..k {
        let mut worst = 0.0f64;
        for l in 0..k {
            if l == j {
                continue;
            }
            let dist = d(&assignment.centroids[j], &assignment.centroids[l])?;
            let ratio = if dist > 0.0 {
                (sigma[j] + sigma[l]) / dist
            } else {
                if j < l {
                    coincident.push((j, l));
                }
                f64::INFINITY
            };
            worst = worst.max(ratio);
        }
        total += worst;
    }
    Ok(DaviesBouldin {
        value: total / k as f64,
        coincident,
    })
}
