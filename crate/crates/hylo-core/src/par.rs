//! Data-parallel helpers for embarrassingly parallel scans (charge families,
//! plateau-radius sweeps). With the default `parallel` feature the work is
//! spread across threads; without it the same API runs sequentially, so
//! callers never branch on the feature themselves. `map_serial` is always
//! sequential, as a baseline for benchmarks.

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Results keep the input order either way.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sequential twin of [`map`], independent of feature flags.
pub fn map_serial<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
