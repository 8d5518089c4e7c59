//! Ordered data-parallel mapping with a sequential fallback.
//!
//! With the `parallel` feature (the default) [`map_ordered`] fans work out
//! over rayon; without it the same call degrades to a plain iterator map.
//! Results come back in input order either way, so any caller that folds
//! them in that order gets output that is bit-identical across both modes
//! and across thread counts.

/// Map `f` over `items`, preserving input order in the result.
#[cfg(feature = "parallel")]
pub fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving input order in the result.
#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Sequential twin of [`map_ordered`], always single-threaded.
///
/// Exists so benchmarks can compare both execution modes in one build.
pub fn map_ordered_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Map `f` over fixed-size index chunks `[start, end)` of a range of `n`
/// items, preserving chunk order. The chunk size is a constant of the call,
/// never derived from thread count, so reductions that fold the returned
/// partials in order are deterministic.
pub fn map_chunks<R, F>(n: usize, chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, usize) -> R + Sync + Send,
{
    assert!(chunk > 0, "chunk size must be positive");
    let bounds: Vec<(usize, usize)> = (0..n.div_ceil(chunk))
        .map(|i| (i * chunk, ((i + 1) * chunk).min(n)))
        .collect();
    map_ordered(&bounds, |&(a, b)| f(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let items: Vec<u64> = (0..1000).collect();
        let doubled = map_ordered(&items, |x| x * 2);
        assert_eq!(doubled, map_ordered_seq(&items, |x| x * 2));
        assert_eq!(doubled[500], 1000);
    }

    #[test]
    fn chunked_bounds_cover_range() {
        let parts = map_chunks(10, 3, |a, b| (a, b));
        assert_eq!(parts, vec![(0, 3), (3, 6), (6, 9), (9, 10)]);
        assert!(map_chunks(0, 4, |a, b| (a, b)).is_empty());
    }
}
