//! Hierarchical coordinator/worker driver: segment the data, cluster the
//! segments concurrently, merge the per-segment results, roll weights up,
//! and recurse on the merged centroids until the cluster count drops to
//! the target.

use std::time::Instant;

use serde::Serialize;

use crate::config::{Config, Segmenter};
use crate::d2::{self, Assignment};
use crate::data::{DataObject, DistShape, GroundMetric, WeightedDataset};
use crate::error::{Error, Result};
use crate::exec;
use crate::rng;
use crate::segmentation;

/// One unit of worker work: a segment of the current level.
#[derive(Debug, Clone)]
pub struct SegmentJob {
    pub segment: usize,
    pub level: usize,
    pub objects: Vec<DataObject>,
    pub weights: Vec<f64>,
    pub k: usize,
    pub seed: u64,
}

/// What a worker sends back for one segment.
#[derive(Debug, Clone, Serialize)]
pub struct SegmentResult {
    pub segment: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<DataObject>,
    pub objective: f64,
}

/// Per-level record of the hierarchy.
#[derive(Debug, Clone, Serialize)]
pub struct LevelTrace {
    pub level: usize,
    /// Index lists of the segments, into the level's data.
    pub segments: Vec<Vec<usize>>,
    pub segment_objectives: Vec<f64>,
    /// Merged centroid list of this level.
    pub centroids: Vec<DataObject>,
    /// Level label map: level data index -> merged centroid index.
    pub label_map: Vec<usize>,
    /// Weights rolled up for the next level (empty at the final level).
    pub rolled_weights: Vec<f64>,
    pub elapsed_ms: f64,
}

/// Full trace of a hierarchical run.
#[derive(Debug, Clone, Serialize)]
pub struct HierarchyTrace {
    pub levels: Vec<LevelTrace>,
    pub final_labels: Vec<usize>,
    pub total_ms: f64,
}

/// Concatenate per-segment centroids in segment order and build the level
/// label map by offsetting each segment's local labels by the number of
/// centroids merged before it.
pub fn merge_level(
    results: &[SegmentResult],
    index_lists: &[Vec<usize>],
    n: usize,
) -> Result<(Vec<DataObject>, Vec<usize>)> {
    if results.len() != index_lists.len() {
        return Err(Error::MissingSegment(results.len().min(index_lists.len())));
    }
    let mut centroids = Vec::new();
    let mut label_map = vec![usize::MAX; n];
    for (mu, (result, indices)) in results.iter().zip(index_lists).enumerate() {
        if result.segment != mu {
            return Err(Error::MissingSegment(mu));
        }
        let offset = centroids.len();
        for (local, &global) in indices.iter().enumerate() {
            label_map[global] = result.labels[local] + offset;
        }
        centroids.extend(result.centroids.iter().cloned());
    }
    if label_map.contains(&usize::MAX) {
        return Err(Error::InvalidConfig(
            "segments do not cover the level data".into(),
        ));
    }
    Ok((centroids, label_map))
}

/// Rewrite bottom labels through a level label map.
pub fn propagate_labels(bottom: &[usize], level_map: &[usize]) -> Result<Vec<usize>> {
    bottom
        .iter()
        .map(|&l| {
            level_map.get(l).copied().ok_or(Error::LabelOutOfRange {
                label: l,
                len: level_map.len(),
            })
        })
        .collect()
}

/// Sum child weights into each parent entry. Total weight is conserved.
pub fn rollup_weights(level_map: &[usize], weights: &[f64], parents: usize) -> Vec<f64> {
    let mut rolled = vec![0.0; parents];
    for (&parent, &w) in level_map.iter().zip(weights) {
        rolled[parent] += w;
    }
    rolled
}

fn alphabet_sizes(dataset: &WeightedDataset) -> Vec<usize> {
    dataset
        .shape
        .iter()
        .map(|s| match s {
            DistShape::Symbolic { alphabet } => *alphabet,
            DistShape::Numeric { .. } => 0,
        })
        .collect()
}

/// Hierarchical (weighted) D2-clustering.
///
/// Per level: segment the current data, run weighted full clustering on
/// every segment (job `mu` on worker `mu % workers`), merge results in
/// segment order, propagate labels to the bottom, and either stop when the
/// merged centroid count reaches `k` or roll weights up and recurse on the
/// centroids. A level that fits one segment is clustered straight into
/// `min(k, n)` clusters, so the output count is exactly `min(k, N)`.
pub fn parallel_d2_cluster(
    dataset: &WeightedDataset,
    metrics: &[GroundMetric],
    config: &Config,
) -> Result<(Assignment, HierarchyTrace)> {
    config.validate()?;
    crate::data::check_metrics(dataset, metrics)?;
    let start = Instant::now();
    let n_bottom = dataset.len();
    let symbol_sizes = alphabet_sizes(dataset);

    let mut objects = dataset.objects.clone();
    let mut weights = dataset.weights.clone();
    let mut bottom_labels: Vec<usize> = (0..n_bottom).collect();
    let mut levels: Vec<LevelTrace> = Vec::new();
    let mut final_objective = 0.0;
    let mut final_centroids: Vec<DataObject> = Vec::new();

    let max_levels = 64;
    for level in 1..=max_levels {
        let level_start = Instant::now();
        let n = objects.len();
        let single = n <= config.tau;

        let segments: Vec<Vec<usize>> = if single {
            vec![(0..n).collect()]
        } else {
            match config.segmenter {
                Segmenter::BinarySplit => segmentation::binary_split_segment(
                    &objects,
                    &weights,
                    config.tau,
                    metrics,
                    config,
                    rng::sub_seed(config.seed, level as u64, u64::MAX - 1),
                )?,
                Segmenter::Vq => {
                    let books = if symbol_sizes.iter().all(|&a| a == 0) {
                        Some(segmentation::build_codebook(
                            &objects,
                            &weights,
                            32,
                            rng::sub_seed(config.seed, level as u64, u64::MAX - 2),
                        )?)
                    } else {
                        None
                    };
                    segmentation::vq_segment(
                        &objects,
                        &weights,
                        config.tau,
                        books.as_deref(),
                        &symbol_sizes,
                        rng::sub_seed(config.seed, level as u64, u64::MAX - 1),
                    )?
                }
            }
        };

        let jobs: Vec<SegmentJob> = segments
            .iter()
            .enumerate()
            .map(|(mu, indices)| {
                let size = indices.len();
                let k_mu = if single {
                    config.k.min(size)
                } else {
                    ((size as f64 / config.entries_per_cluster as f64).round() as usize).max(1)
                };
                SegmentJob {
                    segment: mu,
                    level,
                    objects: indices.iter().map(|&i| objects[i].clone()).collect(),
                    weights: indices.iter().map(|&i| weights[i]).collect(),
                    k: k_mu,
                    seed: rng::sub_seed(config.seed, level as u64, mu as u64),
                }
            })
            .collect();

        let results: Vec<SegmentResult> = exec::run_jobs(jobs, config.workers, |mu, job| {
            d2::d2_cluster(&job.objects, &job.weights, job.k, metrics, config, job.seed)
                .map(|a| SegmentResult {
                    segment: job.segment,
                    labels: a.labels,
                    centroids: a.centroids,
                    objective: a.objective,
                })
                .map_err(|e| Error::Worker {
                    level,
                    segment: mu,
                    source: Box::new(e),
                })
        })?;

        let (merged, label_map) = merge_level(&results, &segments, n)?;
        bottom_labels = propagate_labels(&bottom_labels, &label_map)?;
        let k_prime = merged.len();
        let finished = k_prime <= config.k;
        let rolled = if finished {
            Vec::new()
        } else {
            rollup_weights(&label_map, &weights, k_prime)
        };
        levels.push(LevelTrace {
            level,
            segments,
            segment_objectives: results.iter().map(|r| r.objective).collect(),
            centroids: merged.clone(),
            label_map,
            rolled_weights: rolled.clone(),
            elapsed_ms: level_start.elapsed().as_secs_f64() * 1e3,
        });

        if finished {
            final_objective = results.iter().map(|r| r.objective).sum();
            final_centroids = merged;
            break;
        }
        if level == max_levels {
            return Err(Error::InvalidConfig(format!(
                "hierarchy did not terminate within {max_levels} levels"
            )));
        }
        objects = merged;
        weights = rolled;
    }

    let total_bottom: f64 = dataset.weights.iter().sum();
    let mut proportions = vec![0.0; final_centroids.len()];
    for (&l, &w) in bottom_labels.iter().zip(&dataset.weights) {
        proportions[l] += w / total_bottom;
    }
    let assignment = Assignment {
        labels: bottom_labels.clone(),
        centroids: final_centroids,
        proportions,
        objective: final_objective,
    };
    let trace = HierarchyTrace {
        levels,
        final_labels: bottom_labels,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((assignment, trace))
}

/// Plain sequential clustering of a whole dataset, seeded exactly like the
/// single-segment level of [`parallel_d2_cluster`] so the two coincide
/// when the data fits one segment.
pub fn sequential_d2_cluster(
    dataset: &WeightedDataset,
    metrics: &[GroundMetric],
    config: &Config,
) -> Result<Assignment> {
    config.validate()?;
    crate::data::check_metrics(dataset, metrics)?;
    let k = config.k.min(dataset.len());
    d2::d2_cluster(
        &dataset.objects,
        &dataset.weights,
        k,
        metrics,
        config,
        rng::sub_seed(config.seed, 1, 0),
    )
}

/// Constrained sequential clustering with the same seeding convention.
pub fn sequential_constrained_cluster(
    dataset: &WeightedDataset,
    metrics: &[GroundMetric],
    config: &Config,
) -> Result<Assignment> {
    config.validate()?;
    crate::data::check_metrics(dataset, metrics)?;
    let k = config.k.min(dataset.len());
    d2::constrained_d2_cluster(
        &dataset.objects,
        &dataset.weights,
        k,
        metrics,
        config,
        rng::sub_seed(config.seed, 1, 0),
    )
}
