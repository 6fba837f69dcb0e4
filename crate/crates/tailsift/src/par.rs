//! Feature-gated data-parallel helpers.
//!
//! With the `parallel` feature the mappers run on rayon's global pool;
//! without it they degrade to plain sequential iteration. Output order is
//! the input order either way, so results are identical across both modes.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Always-sequential variant, kept for benchmarking against the parallel
/// path and as the execution mode of the `*_seq` public entry points.
pub(crate) fn map_indexed_seq<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}
