//! Full and constrained (weighted) D2-clustering over a dataset slice:
//! alternate nearest-centroid labeling with per-cluster centroid updates
//! until the summed objective converges.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::centroid::{self, CentroidState};
use crate::config::Config;
use crate::data::{DataObject, Distribution, GroundMetric};
use crate::error::{Error, Result};
use crate::exec;
use crate::rng;
use crate::transport::object_distance_sq;

/// A clustering of a dataset slice: labels, centroids shaped like data
/// objects, per-cluster weight proportions, and the summed objective.
#[derive(Debug, Clone, Serialize)]
pub struct Assignment {
    pub labels: Vec<usize>,
    pub centroids: Vec<DataObject>,
    pub proportions: Vec<f64>,
    pub objective: f64,
}

/// Nearest-centroid labels; ties go to the lowest centroid index.
pub fn assign_labels(
    objects: &[DataObject],
    centroids: &[DataObject],
    metrics: &[GroundMetric],
) -> Result<Vec<usize>> {
    if centroids.is_empty() {
        return Err(Error::InvalidConfig("no centroids to assign to".into()));
    }
    exec::par_try_map_indexed(objects, |_, obj| {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (j, z) in centroids.iter().enumerate() {
            let d = object_distance_sq(obj, z, metrics)?;
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        Ok(best)
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum UpdateMode {
    Full,
    Constrained,
}

/// Weight-proportional sampling of `k` distinct indices.
fn sample_distinct(
    weights: &[f64],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut pool: Vec<(usize, f64)> = weights.iter().copied().enumerate().collect();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = pool.iter().map(|&(_, w)| w).sum();
        let mut pick = rng.random_range(0.0..1.0) * total;
        let mut at = pool.len() - 1;
        for (idx, &(_, w)) in pool.iter().enumerate() {
            pick -= w;
            if pick <= 0.0 {
                at = idx;
                break;
            }
        }
        chosen.push(pool.swap_remove(at).0);
    }
    chosen
}

/// Re-seed empty clusters with the object farthest from its current
/// centroid, drawn from a cluster that can spare a member. Keeps every
/// cluster non-empty without dropping any, which would break the segment
/// size arithmetic upstream.
fn repair_empty_clusters(
    objects: &[DataObject],
    metrics: &[GroundMetric],
    labels: &mut [usize],
    centroids: &mut [DataObject],
) -> Result<usize> {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let mut repairs = 0;
    loop {
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return Ok(repairs);
        };
        let mut far: Option<(usize, f64)> = None;
        for (i, obj) in objects.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = object_distance_sq(obj, &centroids[labels[i]], metrics)?;
            if far.is_none() || d > far.unwrap().1 + 1e-15 {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("k <= n guarantees a donor cluster");
        counts[labels[i]] -= 1;
        labels[i] = empty;
        counts[empty] = 1;
        centroids[empty] = objects[i].clone();
        repairs += 1;
    }
}

#[allow(clippy::too_many_arguments)]
fn cluster_loop(
    objects: &[DataObject],
    weights: &[f64],
    k: usize,
    metrics: &[GroundMetric],
    config: &Config,
    seed: u64,
    mode: UpdateMode,
    initial: Option<Vec<DataObject>>,
) -> Result<Assignment> {
    let n = objects.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let super_dims = objects[0].dists.len();

    let mut centroids = match initial {
        Some(z) => {
            if z.len() != k {
                return Err(Error::InvalidConfig(format!(
                    "{} initial centroids for k = {k}",
                    z.len()
                )));
            }
            z
        }
        None => {
            let mut init_rng = rng::rng_for(seed, 0, 0);
            sample_distinct(weights, k, &mut init_rng)
                .into_iter()
                .map(|i| objects[i].clone())
                .collect()
        }
    };

    let mut labels = assign_labels(objects, &centroids, metrics)?;
    let mut prev = f64::INFINITY;
    let mut objective = 0.0;
    for outer in 0..config.max_iters_labeling {
        repair_empty_clusters(objects, metrics, &mut labels, &mut centroids)?;

        // Per-cluster members, shared across super-dimensions.
        let mut member_idx: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            member_idx[l].push(i);
        }

        let updated: Vec<Result<(DataObject, f64)>> =
            exec::par_map(&member_idx.iter().enumerate().collect::<Vec<_>>(), |&(j, idx)| {
                let w: Vec<f64> = idx.iter().map(|&i| weights[i]).collect();
                let mut dists = Vec::with_capacity(super_dims);
                let mut eps_j = 0.0;
                for (s, metric) in metrics.iter().enumerate() {
                    let members: Vec<&Distribution> =
                        idx.iter().map(|&i| &objects[i].dists[s]).collect();
                    let init = if outer == 0 {
                        let mut c_rng =
                            rng::rng_for(seed, u64::MAX, (j * super_dims + s) as u64);
                        centroid::init_centroid(&members, &w, &mut c_rng)
                    } else {
                        centroids[j].dists[s].clone()
                    };
                    let state: CentroidState = match mode {
                        UpdateMode::Full => {
                            centroid::update_centroid(&members, &w, metric, config, init)?
                        }
                        UpdateMode::Constrained => centroid::update_centroid_uniform(
                            &members,
                            &w,
                            metric,
                            config,
                            init,
                        )?,
                    };
                    eps_j += state.epsilon;
                    dists.push(state.centroid);
                }
                Ok((DataObject::new(format!("z{j}"), dists), eps_j))
            });

        let mut eps = 0.0;
        for (j, res) in updated.into_iter().enumerate() {
            let (z, eps_j) = res?;
            centroids[j] = z;
            eps += eps_j;
        }
        objective = eps;
        debug_assert!(
            !prev.is_finite() || eps <= prev + 1e-9,
            "cluster objective increased: {prev} -> {eps}"
        );
        let converged = prev.is_finite()
            && (prev - eps).abs() <= config.rel_tol * prev.max(1e-12);
        prev = eps;
        if converged || eps <= 1e-15 {
            break;
        }
        labels = assign_labels(objects, &centroids, metrics)?;
        repair_empty_clusters(objects, metrics, &mut labels, &mut centroids)?;
    }

    let total_w: f64 = weights.iter().sum();
    let mut proportions = vec![0.0; k];
    for (&l, &w) in labels.iter().zip(weights) {
        proportions[l] += w / total_w;
    }
    Ok(Assignment {
        labels,
        centroids,
        proportions,
        objective,
    })
}

/// Weighted D2-clustering into `k` clusters.
///
/// Initial centroids are `k` distinct objects sampled by weight; the outer
/// loop alternates nearest-centroid labeling with full centroid updates
/// until the summed objective converges.
pub fn d2_cluster(
    objects: &[DataObject],
    weights: &[f64],
    k: usize,
    metrics: &[GroundMetric],
    config: &Config,
    seed: u64,
) -> Result<Assignment> {
    cluster_loop(objects, weights, k, metrics, config, seed, UpdateMode::Full, None)
}

/// As [`d2_cluster`] but with explicitly forced initial centroids.
pub fn d2_cluster_with_init(
    objects: &[DataObject],
    weights: &[f64],
    metrics: &[GroundMetric],
    config: &Config,
    seed: u64,
    initial: Vec<DataObject>,
) -> Result<Assignment> {
    let k = initial.len();
    cluster_loop(
        objects,
        weights,
        k,
        metrics,
        config,
        seed,
        UpdateMode::Full,
        Some(initial),
    )
}

/// Constrained D2-clustering: centroid probabilities stay uniform so the
/// coupling step separates into one transportation problem per member.
/// Cheaper, and used for data segmentation.
pub fn constrained_d2_cluster(
    objects: &[DataObject],
    weights: &[f64],
    k: usize,
    metrics: &[GroundMetric],
    config: &Config,
    seed: u64,
) -> Result<Assignment> {
    cluster_loop(
        objects,
        weights,
        k,
        metrics,
        config,
        seed,
        UpdateMode::Constrained,
        None,
    )
}

/// As [`constrained_d2_cluster`] with forced initial centroids.
pub fn constrained_d2_cluster_with_init(
    objects: &[DataObject],
    weights: &[f64],
    metrics: &[GroundMetric],
    config: &Config,
    seed: u64,
    initial: Vec<DataObject>,
) -> Result<Assignment> {
    let k = initial.len();
    cluster_loop(
        objects,
        weights,
        k,
        metrics,
        config,
        seed,
        UpdateMode::Constrained,
        Some(initial),
    )
}
