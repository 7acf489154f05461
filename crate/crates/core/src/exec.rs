//! Replication scheduling.
//!
//! Monte Carlo replications are independent tasks indexed by `0..n`. Results
//! are always returned in index order, so aggregation does not depend on how
//! the tasks were scheduled. With the `parallel` feature (default) the tasks
//! run on the rayon pool; without it, or with [`ExecMode::Sequential`], they
//! run in a plain loop.

use serde::{Deserialize, Serialize};

/// How a batch of independent replications is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    #[default]
    Parallel,
    Sequential,
}

impl ExecMode {
    /// `Parallel` when the crate was built with rayon, else `Sequential`.
    pub fn effective(self) -> ExecMode {
        if cfg!(feature = "parallel") {
            self
        } else {
            ExecMode::Sequential
        }
    }
}

/// Evaluate `f(i)` for `i in 0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode.effective() {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Size the global worker pool. Has an effect only before the pool is first
/// used and only with the `parallel` feature; returns whether it took effect.
pub fn set_worker_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

/// Per-replication seed: `master_seed XOR replication_index`.
///
/// The generator is seeded through `SeedableRng::seed_from_u64`, which expands
/// the 64-bit value with a PCG stream, so adjacent indices give unrelated
/// ChaCha keys.
pub fn replication_seed(master_seed: u64, replication: usize) -> u64 {
    master_seed ^ replication as u64
}
