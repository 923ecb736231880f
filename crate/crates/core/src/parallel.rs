//! Thin switch between rayon and sequential execution.
//!
//! Batch entry points map over slices of independent work items. With the
//! default `parallel` feature they fan out over rayon's global pool;
//! without it they run a plain sequential loop with identical results, so
//! outputs never depend on the feature set or thread count.

/// Maps `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Maps `f` over `items`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Caps rayon's global pool at `workers` threads. A no-op without the
/// `parallel` feature, or if a pool was already initialised.
#[cfg(feature = "parallel")]
pub fn limit_workers(workers: usize) {
    if workers == 0 {
        return;
    }
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn limit_workers(_workers: usize) {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_collect_preserves_order() {
        let items: Vec<u64> = (0..1000).collect();
        let out = map_collect(&items, |&x| x * x);
        let expect: Vec<u64> = items.iter().map(|&x| x * x).collect();
        assert_eq!(out, expect);
    }
}
