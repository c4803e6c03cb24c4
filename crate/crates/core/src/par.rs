//! Execution strategy for the data-parallel loops.
//!
//! With the `parallel` feature the default is [`Exec::Parallel`], backed by
//! rayon; without it every call runs sequentially. Both paths produce results
//! in input order, so output never depends on the strategy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Environment variable that caps the worker count of the global pool.
pub const THREADS_ENV: &str = "SKYCOVER_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Runs two closures, potentially concurrently.
pub fn join<A, B, RA, RB>(exec: Exec, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => rayon::join(a, b),
        _ => (a(), b()),
    }
}

/// Sizes the global rayon pool from an explicit count or from
/// `SKYCOVER_THREADS`. Returns the count in effect, or `None` when the
/// default pool is used. A no-op in sequential builds.
pub fn init_thread_pool(threads: Option<usize>) -> Option<usize> {
    let requested = threads.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })?;
    #[cfg(feature = "parallel")]
    {
        // Fails only if the pool was already built; keep whatever exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(requested).build_global();
    }
    Some(requested)
}
