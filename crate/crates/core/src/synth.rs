//! Synthetic bags of weighted vectors planted around well-separated
//! centroids, for recovery experiments. Samples perturb their centroid's
//! supports with Gaussian noise, so squared distances to the centroid are
//! approximately Gamma distributed.

use rand::Rng;
use rand_distr::{Distribution as RandDistribution, Normal};

use crate::data::{DataObject, Distribution, SupportPoint, WeightedDataset};
use crate::error::Result;
use crate::rng::rng_for;

#[derive(Debug, Clone)]
pub struct SynthParams {
    /// Planted cluster count.
    pub clusters: usize,
    /// Samples per planted cluster.
    pub per_cluster: usize,
    /// Coordinate dimensionality.
    pub dim: usize,
    /// Supports per bag.
    pub supports: usize,
    /// Support perturbation standard deviation.
    pub noise: f64,
    /// Minimum pairwise transportation distance between planted centroids.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            clusters: 4,
            per_cluster: 25,
            dim: 2,
            supports: 3,
            noise: 0.05,
            separation: 4.0,
            seed: 0,
        }
    }
}

/// Generate a labeled synthetic dataset.
///
/// Planted centroid bags sit on a coarse lattice with spacing
/// `separation * (1 + sqrt(dim))` and draw their supports uniformly from a
/// box of side `separation` around the lattice point, which guarantees
/// every cross-centroid support pair is at least `separation` apart (and
/// hence the pairwise transportation distance is too). Each sample jitters
/// the support coordinates with iid Gaussian noise and, when the noise is
/// nonzero, re-normalized multiplicative log-normal noise on the
/// probabilities. All weights are one.
pub fn generate(params: &SynthParams) -> Result<(WeightedDataset, Vec<usize>)> {
    assert!(params.clusters >= 1 && params.per_cluster >= 1);
    assert!(params.dim >= 1 && params.supports >= 1);
    assert!(params.separation > 0.0);

    let mut rng = rng_for(params.seed, 0x5f_a7, 0);
    let spacing = params.separation * (1.0 + (params.dim as f64).sqrt());
    let side = (params.clusters as f64).powf(1.0 / params.dim as f64).ceil() as usize;

    // Planted centroid bags on the lattice.
    let mut centers = Vec::with_capacity(params.clusters);
    for c in 0..params.clusters {
        let mut cell = c;
        let mut origin = Vec::with_capacity(params.dim);
        for _ in 0..params.dim {
            origin.push((cell % side) as f64 * spacing);
            cell /= side;
        }
        let supports: Vec<SupportPoint> = (0..params.supports)
            .map(|_| {
                SupportPoint::Numeric(
                    origin
                        .iter()
                        .map(|&o| o + rng.random_range(-0.5..0.5) * params.separation)
                        .collect(),
                )
            })
            .collect();
        centers.push(Distribution::uniform(supports));
    }

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut objects = Vec::with_capacity(params.clusters * params.per_cluster);
    let mut labels = Vec::with_capacity(objects.capacity());
    for (c, center) in centers.iter().enumerate() {
        for s in 0..params.per_cluster {
            let supports: Vec<SupportPoint> = center
                .supports
                .iter()
                .map(|sp| {
                    SupportPoint::Numeric(
                        sp.coords()
                            .unwrap()
                            .iter()
                            .map(|&x| x + params.noise * normal.sample(&mut rng))
                            .collect(),
                    )
                })
                .collect();
            let probs = if params.noise > 0.0 {
                let mut p: Vec<f64> = center
                    .probs
                    .iter()
                    .map(|&q| q * (0.1 * normal.sample(&mut rng)).exp())
                    .collect();
                let total: f64 = p.iter().sum();
                for q in &mut p {
                    *q /= total;
                }
                p
            } else {
                center.probs.clone()
            };
            objects.push(DataObject::new(
                format!("c{c}-s{s}"),
                vec![Distribution::new(supports, probs)],
            ));
            labels.push(c);
        }
    }
    let weights = vec![1.0; objects.len()];
    let dataset = crate::data::validate_dataset(objects, weights)?;
    Ok((dataset, labels))
}
