//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the `*_par` entry points fan out
//! on the global rayon pool; without it they alias the sequential loops.
//! Results are collected in index order, so outputs are identical either
//! way and independent of the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting in index order.
pub fn indexed_map<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        indexed_map_seq(n, f)
    }
}

/// Sequential twin of [`indexed_map`]; always compiled, used by the
/// comparison benches and as the fallback implementation.
pub fn indexed_map_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Map `f` over a slice, collecting in order.
pub fn slice_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
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

/// Configure the global rayon pool to `threads` workers. No-op without the
/// `parallel` feature or if a pool was already built.
pub fn set_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
    }
}
