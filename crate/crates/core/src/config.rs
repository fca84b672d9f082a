use serde::Serialize;

use crate::error::{Error, Result};

/// Segmentation strategy used by the hierarchical driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Segmenter {
    /// Iterative binary splitting via constrained clustering.
    BinarySplit,
    /// Vector-quantized histograms split by Euclidean K-means.
    Vq,
}

/// Run configuration shared by the clustering drivers.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    /// Target (upper bound) cluster count.
    pub k: usize,
    /// Maximum segment size handled by one worker.
    pub tau: usize,
    /// Target data entries represented by each local centroid.
    pub entries_per_cluster: usize,
    /// Worker count for segment jobs.
    pub workers: usize,
    /// Iteration cap for the centroid update loop.
    pub max_iters_centroid: usize,
    /// Iteration cap for the label/centroid outer loop.
    pub max_iters_labeling: usize,
    /// Relative convergence tolerance.
    pub rel_tol: f64,
    /// Seed all run randomness derives from.
    pub seed: u64,
    /// Keep centroid supports fixed (symbolic data always does).
    pub fix_supports: bool,
    /// Segmentation strategy.
    pub segmenter: Segmenter,
}

impl Config {
    pub fn new(k: usize) -> Self {
        Config {
            k,
            ..Config::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.entries_per_cluster < 2 {
            // With e = 1 every entry becomes its own centroid and no level
            // shrinks the data.
            return Err(Error::InvalidConfig(
                "entries per cluster must be at least 2".into(),
            ));
        }
        if self.tau < self.entries_per_cluster {
            return Err(Error::InvalidConfig(format!(
                "segment size {} below entries per cluster {}",
                self.tau, self.entries_per_cluster
            )));
        }
        if self.workers < 1 {
            return Err(Error::InvalidConfig("worker count must be at least 1".into()));
        }
        if self.max_iters_centroid < 1 || self.max_iters_labeling < 1 {
            return Err(Error::InvalidConfig("iteration caps must be at least 1".into()));
        }
        if !self.rel_tol.is_finite() || self.rel_tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "relative tolerance {} must be positive",
                self.rel_tol
            )));
        }
        Ok(())
    }
}

impl Default for Config {
    fn default() -> Self {
        Config {
            k: 1,
            tau: 50,
            entries_per_cluster: 5,
            workers: 1,
            max_iters_centroid: 500,
            max_iters_labeling: 500,
            rel_tol: 1e-4,
            seed: 0,
            fix_supports: false,
            segmenter: Segmenter::BinarySplit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(Config::new(3).validate().is_ok());
    }

    #[test]
    fn rejects_tiny_entries_per_cluster() {
        let cfg = Config {
            entries_per_cluster: 1,
            ..Config::new(2)
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_tau_below_e() {
        let cfg = Config {
            tau: 3,
            entries_per_cluster: 5,
            ..Config::new(2)
        };
        assert!(cfg.validate().is_err());
    }
}
