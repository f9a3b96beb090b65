//! Data-parallel map helpers.
//!
//! Batch gradients, per-region evaluation and importance cells are all
//! independent computations whose results are reduced afterwards in a fixed
//! order. These helpers run them via rayon when the `parallel` feature is
//! enabled (the default) and fall back to plain sequential iteration when it
//! is not. Both paths return results in input order, so the numeric output
//! of the crate is identical under either feature setting.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Sequential reference implementation, always available (the benches compare
/// against it).
pub fn map_indexed_seq<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Results are in index order either way.
#[cfg(feature = "parallel")]
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    map_indexed_seq(n, f)
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Send + Sync,
{
    map_indexed(items.len(), |i| f(&items[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_matches_sequential() {
        let f = |i: usize| (i * i) as f64 / 3.0;
        assert_eq!(map_indexed(100, f), map_indexed_seq(100, f));
    }

    #[test]
    fn slice_map_preserves_order() {
        let xs = vec![3, 1, 4, 1, 5];
        assert_eq!(map_slice(&xs, |x| x * 2), vec![6, 2, 8, 2, 10]);
    }
}
