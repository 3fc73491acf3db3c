//! Per-particle data parallelism.
//!
//! Every hot loop in the crate (likelihood evaluation per particle, per
//! grid node, per restart, per run-length hypothesis) goes through
//! [`map_indexed`]. With the `parallel` feature the work is spread over the
//! rayon pool; without it, or in [`Execution::Sequential`] mode, it runs in a
//! plain loop. Output order is always index order, and all randomness is
//! drawn from index-keyed streams, so both paths are bitwise identical.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Whether this mode actually runs on the thread pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(0..n)` and collects the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Like [`map_indexed`] but short-circuits on the first error (by index order
/// of the returned error in the sequential case).
pub fn try_map_indexed<T, E, F>(exec: Execution, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            use rayon::prelude::*;
            // Collect everything first so the reported error is the lowest
            // failing index, independent of scheduling.
            let all: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
            return all.into_iter().collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Consumes `items`, mapping each with `f`, preserving order.
pub fn try_map_owned<T, R, E, F>(exec: Execution, items: Vec<T>, f: F) -> Result<Vec<R>, E>
where
    T: Send,
    R: Send,
    E: Send,
    F: Fn(T) -> Result<R, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Execution::Parallel {
            use rayon::prelude::*;
            let all: Vec<Result<R, E>> = items.into_par_iter().map(f).collect();
            return all.into_iter().collect();
        }
    }
    let _ = exec;
    items.into_iter().map(f).collect()
}
