//! Data-parallel inner loops with a sequential fallback.
//!
//! The `parallel` feature (on by default) routes these helpers through rayon;
//! without it they run sequentially with identical results. All helpers write
//! disjoint, index-addressed output, so the output bytes do not depend on the
//! thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to equal-sized mutable chunks of `data`, passing the chunk index.
pub(crate) fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    debug_assert!(chunk > 0);
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Collect `f(0), ..., f(n-1)` preserving index order.
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// True when the parallel feature is compiled in.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
