//! Trial dispatch. Trials are independent and keyed by index, so the
//! parallel and sequential paths return identical, index-ordered results.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecutionMode {
    Sequential,
    /// Rayon worker pool; falls back to sequential without the `parallel` feature.
    #[default]
    Parallel,
}

pub fn map_trials<T, F>(trials: Range<u64>, mode: ExecutionMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == ExecutionMode::Parallel {
        use rayon::prelude::*;
        return trials.into_par_iter().map(f).collect();
    }
    let _ = mode;
    trials.map(f).collect()
}

/// Runs `f` on a pool of `threads` workers (the global pool when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| crate::Error::InvalidArgument(format!("cannot start {n} worker threads: {e}")))?;
        return Ok(pool.install(f));
    }
    let _ = threads;
    Ok(f())
}
