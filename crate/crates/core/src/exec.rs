//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the closures run on the rayon pool; without it
//! they run inline. Output order is the input index order in both cases, so
//! callers that reduce in order get identical results either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
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

/// Split `0..total` into chunks of at most `chunk` items and map `f` over the
/// chunk ranges, collecting per-chunk results in chunk order.
pub(crate) fn map_chunks<T, F>(total: u64, chunk: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync + Send,
{
    assert!(chunk > 0);
    let n_chunks = total.div_ceil(chunk) as usize;
    map_indices(n_chunks, |c| {
        let start = c as u64 * chunk;
        f(start..(start + chunk).min(total))
    })
}
