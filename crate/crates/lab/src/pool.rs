//! Replica pool. Results come back in replica order whatever the number of
//! workers, so every fold over them is deterministic.

use anyhow::{Context, Result};
use rayon::prelude::*;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "ANNIHILATE_LAB_WORKERS";

/// Worker count: the environment override, else the configured value, else
/// the available parallelism.
pub fn worker_count(configured: Option<usize>) -> Result<usize> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{WORKERS_ENV}={v:?} is not a count"))?;
        anyhow::ensure!(n >= 1, "{WORKERS_ENV} must be at least 1");
        return Ok(n);
    }
    Ok(configured.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)))
}

/// Run `f(0..n)` on `workers` threads and collect the results in index order.
pub fn run_indexed<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}
