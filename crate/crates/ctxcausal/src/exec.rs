//! Parallel candidate evaluation on a rayon thread pool.

use ctxcausal_core::Executor;
use rayon::prelude::*;

use crate::error::{AppError, Result};

/// Runs causal tests on a dedicated pool; results keep input order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// Pool with `workers` threads; 0 picks the number of CPUs.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| AppError::Usage(format!("cannot start {workers} workers: {e}")))?;
        Ok(Self { pool })
    }

    /// Threads in the pool.
    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}
