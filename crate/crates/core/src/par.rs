//! Trial runner: rayon work-stealing when the `parallel` feature is on,
//! a plain loop otherwise. Results always come back in trial order.

/// Evaluates `job(0..count)` and returns the results in index order.
/// `parallelism == 0` uses every available core; `1` forces the sequential path.
pub fn run_trials<T, F>(count: usize, parallelism: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallelism != 1 {
            return run_parallel(count, parallelism, job);
        }
    }
    let _ = parallelism;
    run_sequential(count, job)
}

pub fn run_sequential<T, F>(count: usize, job: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(job).collect()
}

#[cfg(feature = "parallel")]
pub fn run_parallel<T, F>(count: usize, parallelism: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let work = || (0..count).into_par_iter().map(&job).collect();
    if parallelism == 0 {
        return work();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(parallelism).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

/// Whether the crate was built with the rayon backend.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = run_trials(100, 1, |i| i * i);
        for p in [0, 2, 4] {
            assert_eq!(run_trials(100, p, |i| i * i), seq);
        }
        assert!(run_trials(0, 0, |i| i).is_empty());
    }
}
