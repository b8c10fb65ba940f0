//! Case-level parallelism. Results always come back in index order, so a
//! parallel run is bit-identical to a serial one.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// `[f(0), f(1), ..., f(n - 1)]`.
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
