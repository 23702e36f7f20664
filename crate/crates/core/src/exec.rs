//! Executor for the per-case batch loops (mutation, census, verification,
//! grading). Every loop body is independent, so results are identical under
//! both strategies; only throughput differs.

/// How a batch of independent per-item jobs is run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// One item after another on the calling thread.
    Sequential,
    /// Data-parallel on a work-stealing pool. `threads = 0` uses the global
    /// pool; any other value runs on a dedicated pool of that size. Falls
    /// back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
    ParallelWith {
        threads: usize,
    },
}

impl Exec {
    /// Parallel with a bounded number of threads (`0` = global pool).
    pub fn with_threads(threads: usize) -> Self {
        if threads == 0 {
            Exec::Parallel
        } else {
            Exec::ParallelWith { threads }
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self != Exec::Sequential
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Exec::ParallelWith { threads } => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                    Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
                    Err(e) => {
                        log::warn!("cannot build a {threads}-thread pool ({e}); running sequentially");
                        items.iter().map(f).collect()
                    }
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => items.iter().map(f).collect(),
        }
    }

    pub fn describe(self) -> String {
        match self {
            _ if !self.is_parallel() => "sequential".into(),
            Exec::ParallelWith { threads } => format!("parallel({threads})"),
            _ => "parallel".into(),
        }
    }
}
