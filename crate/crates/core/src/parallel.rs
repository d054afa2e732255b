//! Order-preserving data-parallel helpers.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it every helper runs sequentially on the calling thread. Both
//! paths return results in input order.

/// Sequential reference path, always available.
pub fn map_ordered_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Runs `f` over `items` on a dedicated pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn map_ordered_par<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    match rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .thread_name(|i| format!("failtax-worker-{i}"))
        .build()
    {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        // Thread spawn failure: degrade to the calling thread.
        Err(_) => map_ordered_seq(items, f),
    }
}

/// Uses the parallel path when it is compiled in and more than one worker
/// is requested.
pub fn map_ordered<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 1 && items.len() > 1 {
        return map_ordered_par(items, threads, f);
    }
    let _ = threads;
    map_ordered_seq(items, f)
}

/// Sequential counterpart of [`fold_reduce`].
pub fn fold_seq<T, A, I, F>(items: &[T], init: I, fold: F) -> A
where
    I: Fn() -> A,
    F: Fn(A, &T) -> A,
{
    items.iter().fold(init(), fold)
}

/// Folds `items` into per-chunk accumulators and merges them. `merge` must
/// be associative and `init` its identity for the result to match the
/// sequential fold.
pub fn fold_reduce<T, A, I, F, M>(items: &[T], init: I, fold: F, merge: M) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, &T) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().fold(&init, &fold).reduce(&init, &merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = merge;
        fold_seq(items, init, fold)
    }
}
