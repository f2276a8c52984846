//! Worker-pool helpers.
//!
//! With the `parallel` feature (default) the ensemble loops fan out over a
//! rayon pool; without it they run sequentially with identical results, since
//! every task derives its randomness from its own index.

/// Runs `f` under a pool of `workers` threads (0 = rayon default). Without
/// the `parallel` feature the closure runs on the current thread.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            return f();
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("failed to build worker pool")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

/// Maps `f` over `0..n` preserving index order in the output.
pub fn par_map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
