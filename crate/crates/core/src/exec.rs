//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) work runs on a dedicated rayon pool
//! sized by the caller; `workers == 1` or a build without the feature runs the
//! same closure serially. Output order is always the index order, so results
//! never depend on scheduling.

/// Number of hardware threads, the meaning of `workers == 0`.
pub fn available_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Evaluate `f(0..n)` and collect results in index order.
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let workers = if workers == 0 {
        available_workers()
    } else {
        workers
    };
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    parallel_map(n, workers, f)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, _workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
