//! Job execution for the coordinator/worker contract.
//!
//! Jobs are independent and immutable; job `mu` runs on worker `mu % M`,
//! and results are collected keyed by `mu`. Outputs therefore never depend
//! on scheduling, only on the job inputs. With the `parallel` feature the
//! worker buckets run on rayon; the sequential fallback processes the same
//! buckets in order and produces identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;

fn buckets<J>(jobs: Vec<J>, workers: usize) -> Vec<Vec<(usize, J)>> {
    let workers = workers.max(1);
    let mut buckets: Vec<Vec<(usize, J)>> = (0..workers).map(|_| Vec::new()).collect();
    for (mu, job) in jobs.into_iter().enumerate() {
        buckets[mu % workers].push((mu, job));
    }
    buckets
}

fn gather<R>(results: Vec<Vec<(usize, Result<R>)>>, n: usize) -> Result<Vec<R>> {
    let mut slots: Vec<Option<Result<R>>> = (0..n).map(|_| None).collect();
    for bucket in results {
        for (mu, res) in bucket {
            slots[mu] = Some(res);
        }
    }
    // Report the failure with the smallest segment index, deterministically.
    let mut out = Vec::with_capacity(n);
    for slot in slots {
        out.push(slot.expect("every job produces a result")?);
    }
    Ok(out)
}

/// Run jobs on `workers` parallel workers; results are returned in job order.
#[cfg(feature = "parallel")]
pub fn run_jobs_parallel<J, R, F>(jobs: Vec<J>, workers: usize, f: F) -> Result<Vec<R>>
where
    J: Send,
    R: Send,
    F: Fn(usize, J) -> Result<R> + Sync,
{
    let n = jobs.len();
    let results: Vec<Vec<(usize, Result<R>)>> = buckets(jobs, workers)
        .into_par_iter()
        .map(|bucket| {
            bucket
                .into_iter()
                .map(|(mu, job)| {
                    let res = f(mu, job);
                    (mu, res)
                })
                .collect()
        })
        .collect();
    gather(results, n)
}

/// Sequential fallback: identical bucket order, one worker at a time.
pub fn run_jobs_sequential<J, R, F>(jobs: Vec<J>, workers: usize, f: F) -> Result<Vec<R>>
where
    F: Fn(usize, J) -> Result<R>,
{
    let n = jobs.len();
    let results: Vec<Vec<(usize, Result<R>)>> = buckets(jobs, workers)
        .into_iter()
        .map(|bucket| {
            bucket
                .into_iter()
                .map(|(mu, job)| {
                    let res = f(mu, job);
                    (mu, res)
                })
                .collect()
        })
        .collect();
    gather(results, n)
}

/// Dispatch to the compiled execution backend.
pub fn run_jobs<J, R, F>(jobs: Vec<J>, workers: usize, f: F) -> Result<Vec<R>>
where
    J: Send,
    R: Send,
    F: Fn(usize, J) -> Result<R> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        run_jobs_parallel(jobs, workers, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_jobs_sequential(jobs, workers, f)
    }
}

/// Map over items, in parallel when compiled with the `parallel` feature.
/// The output is position-stable either way.
pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Fallible indexed map with the same dispatch behavior as [`par_map`].
pub(crate) fn par_try_map_indexed<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> Result<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items
            .par_iter()
            .enumerate()
            .map(|(i, t)| f(i, t))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}
