//! Thin data-parallel helper. With the `parallel` feature (default) the
//! closures run on a rayon pool sized by `jobs`; without it everything
//! falls back to a sequential loop, which keeps the core buildable on
//! targets without threads.

/// Maps `f` over `0..n`, preserving index order in the output.
/// `jobs = 1` forces sequential execution; `jobs = 0` uses all cores.
pub fn map_indexed<T, F>(jobs: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
    #[cfg(feature = "parallel")]
    {
        if jobs != 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .expect("rayon pool");
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
    }
    (0..n).map(f).collect()
}
