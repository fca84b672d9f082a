//! Dataset segmentation: split a dataset into segments of size <= tau,
//! either by iterative binary splitting with constrained clustering or by
//! vector-quantized histograms grouped with Euclidean K-means.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::d2;
use crate::data::{DataObject, GroundMetric, SupportPoint};
use crate::error::{Error, Result};
use crate::rng;
use crate::transport::object_distance_sq;

const SPLIT_SALT: u64 = 0x5e67;
const VQ_SALT: u64 = 0x76_71;

/// Split into segments of size <= tau by repeatedly splitting the largest
/// segment in two with constrained clustering. Returns disjoint index
/// lists covering the input.
pub fn binary_split_segment(
    objects: &[DataObject],
    weights: &[f64],
    tau: usize,
    metrics: &[GroundMetric],
    config: &Config,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    assert!(tau >= 2, "segment size below 2");
    let n = objects.len();
    let mut segments: Vec<Vec<usize>> = vec![(0..n).collect()];
    // Largest segment first; ties by lowest segment id.
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> = BinaryHeap::new();
    heap.push((n, Reverse(0)));
    let mut splits = 0u64;
    while let Some((size, Reverse(id))) = heap.pop() {
        if size <= tau {
            break;
        }
        let indices = std::mem::take(&mut segments[id]);
        let sub_objects: Vec<DataObject> = indices.iter().map(|&i| objects[i].clone()).collect();
        let sub_weights: Vec<f64> = indices.iter().map(|&i| weights[i]).collect();
        let split_seed = rng::sub_seed(seed, SPLIT_SALT, splits);
        splits += 1;
        let assignment = d2::constrained_d2_cluster(
            &sub_objects,
            &sub_weights,
            2,
            metrics,
            config,
            split_seed,
        )?;
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (local, &global) in indices.iter().enumerate() {
            if assignment.labels[local] == 0 {
                left.push(global);
            } else {
                right.push(global);
            }
        }
        if left.is_empty() || right.is_empty() {
            // Repair should prevent this; fall back to a median split by
            // distance to the segment's first element.
            let anchor = &sub_objects[0];
            let mut by_dist: Vec<(usize, f64)> = indices
                .iter()
                .enumerate()
                .map(|(local, &global)| {
                    Ok((global, object_distance_sq(&sub_objects[local], anchor, metrics)?))
                })
                .collect::<Result<_>>()?;
            by_dist.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            let half = by_dist.len() / 2;
            left = by_dist[..half].iter().map(|&(g, _)| g).collect();
            right = by_dist[half..].iter().map(|&(g, _)| g).collect();
        }
        segments[id] = left;
        heap.push((segments[id].len(), Reverse(id)));
        let new_id = segments.len();
        heap.push((right.len(), Reverse(new_id)));
        segments.push(right);
    }
    Ok(segments.into_iter().filter(|s| !s.is_empty()).collect())
}

/// Euclidean Lloyd iteration on weighted points. Deterministic in the rng;
/// empty codes are re-seeded with the farthest point.
fn lloyd(
    points: &[Vec<f64>],
    weights: &[f64],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = points.len();
    let k = k.min(n).max(1);
    let mut pool: Vec<(usize, f64)> = weights.iter().copied().enumerate().collect();
    let mut codes: Vec<Vec<f64>> = (0..k)
        .map(|_| {
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
            points[pool.swap_remove(at).0].clone()
        })
        .collect();

    let sqdist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in codes.iter().enumerate() {
                let d = sqdist(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            labels[i] = best;
        }
        // Re-seed empty codes with the farthest point from its code.
        loop {
            let mut counts = vec![0usize; k];
            for &l in &labels {
                counts[l] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let mut far = (0usize, -1.0f64);
            for (i, p) in points.iter().enumerate() {
                if counts[labels[i]] < 2 {
                    continue;
                }
                let d = sqdist(p, &codes[labels[i]]);
                if d > far.1 + 1e-15 {
                    far = (i, d);
                }
            }
            if far.1 < 0.0 {
                break;
            }
            labels[far.0] = empty;
            codes[empty] = points[far.0].clone();
        }
        let dim = points[0].len();
        let mut next = vec![vec![0.0; dim]; k];
        let mut mass = vec![0.0f64; k];
        for ((p, &l), &w) in points.iter().zip(&labels).zip(weights) {
            mass[l] += w;
            for (acc, &x) in next[l].iter_mut().zip(p) {
                *acc += w * x;
            }
        }
        let mut moved = 0.0f64;
        for j in 0..k {
            if mass[j] > 0.0 {
                for x in &mut next[j] {
                    *x /= mass[j];
                }
                moved = moved.max(sqdist(&next[j], &codes[j]));
                codes[j] = std::mem::take(&mut next[j]);
            }
        }
        if moved <= 1e-18 {
            break;
        }
    }
    (codes, labels)
}

/// Build per-super-dimension Euclidean codebooks over the pooled support
/// points, weighted by object weight times support probability.
pub fn build_codebook(
    objects: &[DataObject],
    weights: &[f64],
    codebook_size: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if objects.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let super_dims = objects[0].dists.len();
    let mut books = Vec::with_capacity(super_dims);
    for s in 0..super_dims {
        let mut points = Vec::new();
        let mut masses = Vec::new();
        for (obj, &w) in objects.iter().zip(weights) {
            for (sp, &p) in obj.dists[s].supports.iter().zip(&obj.dists[s].probs) {
                match sp {
                    SupportPoint::Numeric(v) => {
                        points.push(v.clone());
                        masses.push(w * p);
                    }
                    SupportPoint::Symbol(_) => {
                        return Err(Error::Unsupported(
                            "codebooks are for numeric supports; symbolic data is already a fixed-alphabet histogram".into(),
                        ));
                    }
                }
            }
        }
        let mut book_rng = rng::rng_for(seed, VQ_SALT, s as u64);
        let (codes, _) = lloyd(&points, &masses, codebook_size, &mut book_rng);
        books.push(codes);
    }
    Ok(books)
}

/// Quantize one object against per-dimension codebooks (or the symbol
/// alphabet) into a concatenated histogram scaled to total mass one.
pub fn vq_histogram(
    obj: &DataObject,
    codebooks: Option<&[Vec<Vec<f64>>]>,
    alphabet_sizes: &[usize],
) -> Vec<f64> {
    let super_dims = obj.dists.len();
    let scale = 1.0 / super_dims as f64;
    let mut hist = Vec::new();
    for s in 0..super_dims {
        let dist = &obj.dists[s];
        match codebooks {
            Some(books) => {
                let codes = &books[s];
                let mut h = vec![0.0; codes.len()];
                for (sp, &p) in dist.supports.iter().zip(&dist.probs) {
                    let v = sp.coords().expect("numeric supports");
                    let mut best = 0;
                    let mut best_d = f64::INFINITY;
                    for (j, c) in codes.iter().enumerate() {
                        let d: f64 =
                            v.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum();
                        if d < best_d {
                            best_d = d;
                            best = j;
                        }
                    }
                    h[best] += p * scale;
                }
                hist.extend(h);
            }
            None => {
                let mut h = vec![0.0; alphabet_sizes[s]];
                for (sp, &p) in dist.supports.iter().zip(&dist.probs) {
                    let sym = sp.symbol().expect("symbolic supports");
                    h[sym] += p * scale;
                }
                hist.extend(h);
            }
        }
    }
    hist
}

/// Segment by clustering vector-quantized histograms with Euclidean
/// K-means into roughly n/tau groups; oversized groups are recursively
/// re-split until every segment holds at most tau objects.
pub fn vq_segment(
    objects: &[DataObject],
    weights: &[f64],
    tau: usize,
    codebooks: Option<&[Vec<Vec<f64>>]>,
    alphabet_sizes: &[usize],
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    assert!(tau >= 2, "segment size below 2");
    let n = objects.len();
    let hists: Vec<Vec<f64>> = objects
        .iter()
        .map(|o| vq_histogram(o, codebooks, alphabet_sizes))
        .collect();
    let groups = n.div_ceil(tau);
    let mut vq_rng = rng::rng_for(seed, VQ_SALT, u64::MAX);
    let (_, labels) = lloyd(&hists, weights, groups, &mut vq_rng);
    let mut segments: Vec<Vec<usize>> = vec![Vec::new(); groups];
    for (i, &l) in labels.iter().enumerate() {
        segments[l].push(i);
    }
    segments.retain(|s| !s.is_empty());

    // Recursive binary K-means on oversized groups.
    let mut done = Vec::new();
    let mut round = 0u64;
    while let Some(seg) = segments.pop() {
        if seg.len() <= tau {
            done.push(seg);
            continue;
        }
        let sub_h: Vec<Vec<f64>> = seg.iter().map(|&i| hists[i].clone()).collect();
        let sub_w: Vec<f64> = seg.iter().map(|&i| weights[i]).collect();
        let mut split_rng = rng::rng_for(seed, VQ_SALT.wrapping_add(1), round);
        round += 1;
        let (_, sub_labels) = lloyd(&sub_h, &sub_w, 2, &mut split_rng);
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (local, &global) in seg.iter().enumerate() {
            if sub_labels[local] == 0 {
                left.push(global);
            } else {
                right.push(global);
            }
        }
        if left.is_empty() || right.is_empty() {
            // Identical histograms cannot be separated; balance by index.
            let half = seg.len() / 2;
            left = seg[..half].to_vec();
            right = seg[half..].to_vec();
        }
        segments.push(left);
        segments.push(right);
    }
    done.sort_by_key(|s| s[0]);
    Ok(done)
}
