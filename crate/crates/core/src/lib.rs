//! Clustering for bags of weighted vectors (discrete distributions) under
//! the Mallows transportation distance.
//!
//! Objects are tuples of discrete distributions; cluster centroids are
//! themselves distributions, computed by alternating a joint linear
//! program over centroid probabilities and member couplings with
//! weighted-average support relocation. On top of the flat algorithm sits
//! a hierarchical driver that segments the data, clusters segments on a
//! worker pool, and recurses on the weighted local centroids, which turns
//! the polynomial-cost flat clustering into something close to
//! linearithmic while keeping results deterministic in the seed.
//!
//! The `parallel` feature (default) runs segment jobs and the hot inner
//! loops on rayon; without it the same code paths run sequentially and
//! produce identical results.

pub mod centroid;
pub mod config;
pub mod d2;
pub mod data;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod parallel;
pub mod rng;
pub mod segmentation;
pub mod simplex;
pub mod synth;
pub mod transport;

pub use config::{Config, Segmenter};
pub use d2::{assign_labels, constrained_d2_cluster, d2_cluster, Assignment};
pub use data::{
    validate_dataset, DataObject, DistShape, Distribution, GroundMetric, SupportPoint,
    SymbolMatrix, WeightedDataset,
};
pub use error::{Error, Result};
pub use metrics::{
    categorical_distance, davies_bouldin, mean_squared_dispersion, mm_distance_sq, DbiDistance,
};
pub use parallel::{parallel_d2_cluster, sequential_d2_cluster, HierarchyTrace};
pub use transport::{mallows_sq, object_distance, object_distance_sq, solve_transportation, Coupling};
