//! Sequential / data-parallel execution switch.
//!
//! Engines that sweep a time grid or a set of matrix elements accept an
//! [`ExecMode`] so the same code path can run on one thread or fan out via
//! rayon. Work items are independent and written into pre-assigned slots,
//! so both modes produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for ExecMode {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        ExecMode::Parallel
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        ExecMode::Sequential
    }
}

/// Apply `f` to `0..n`, collecting results in index order.
pub fn map_indexed<R, F>(mode: ExecMode, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Fallible variant: runs everything, then reports the lowest-index error so
/// failures are deterministic regardless of scheduling.
pub fn try_map_indexed<R, F>(mode: ExecMode, n: usize, f: F) -> crate::Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> crate::Result<R> + Sync + Send,
{
    let results: Vec<crate::Result<R>> = map_indexed(mode, n, f);
    let mut out = Vec::with_capacity(n);
    for r in results {
        out.push(r?);
    }
    Ok(out)
}
