//! Data-parallel helpers. With the `parallel` feature (default) these fan out
//! over the rayon pool; without it they fall back to plain iterators so the
//! numerics are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many elements the sequential path is always taken.
#[cfg(feature = "parallel")]
pub(crate) const MIN_PARALLEL_LEN: usize = 1 << 14;

/// Runs `f` over consecutive mutable chunks of `data`.
pub(crate) fn for_each_chunk<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(&mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if data.len() >= MIN_PARALLEL_LEN && data.len() / chunk >= 2 {
            data.par_chunks_mut(chunk).for_each(f);
            return;
        }
    }
    data.chunks_mut(chunk).for_each(f);
}

/// Runs `f` over matching chunks of two equally sized slices.
pub(crate) fn zip_chunks<T, F>(a: &mut [T], b: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(&mut [T], &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if a.len() >= MIN_PARALLEL_LEN && a.len() / chunk >= 2 {
            a.par_chunks_mut(chunk).zip(b.par_chunks_mut(chunk)).for_each(|(x, y)| f(x, y));
            return;
        }
    }
    a.chunks_mut(chunk).zip(b.chunks_mut(chunk)).for_each(|(x, y)| f(x, y));
}

/// Element-wise update with the element index.
pub(crate) fn for_each_indexed<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if data.len() >= MIN_PARALLEL_LEN {
            data.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
            return;
        }
    }
    data.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

/// Sum of `f(i)` over `0..len`. The parallel reduction tree differs from the
/// sequential left fold, so results agree to rounding, not bit-for-bit.
pub(crate) fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if len >= MIN_PARALLEL_LEN {
            return (0..len).into_par_iter().map(f).sum();
        }
    }
    (0..len).map(f).sum()
}

/// Maps independent work items, preserving order. Always fans out when the
/// feature is on since items are expected to be coarse (grid cells, instances).
pub(crate) fn map_collect<I, T, F>(items: Vec<I>, f: F) -> Vec<T>
where
    I: Send,
    T: Send,
    F: Fn(I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}
