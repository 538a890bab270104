//! Ordered parallel map.
//!
//! With the `parallel` feature, [`Executor`] runs jobs on a dedicated rayon
//! pool; without it, or with one worker, jobs run inline. Either way results
//! come back in job-index order, so downstream reductions are identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// `workers == 0` means one worker per available core.
    pub fn new(workers: usize) -> Self {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        #[cfg(feature = "parallel")]
        {
            let pool = (workers > 1).then(|| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .expect("failed to build rayon pool")
            });
            Self { workers, pool }
        }
        #[cfg(not(feature = "parallel"))]
        Self { workers }
    }

    pub fn sequential() -> Self {
        Self::new(1)
    }

    /// Worker count actually in use (1 when built without `parallel`).
    pub fn workers(&self) -> usize {
        #[cfg(feature = "parallel")]
        {
            if self.pool.is_some() {
                self.workers
            } else {
                1
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = self.workers;
            1
        }
    }

    /// `(0..jobs).map(f)` with results in index order.
    pub fn map_indexed<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| (0..jobs).into_par_iter().map(&f).collect());
        }
        (0..jobs).map(f).collect()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::sequential()
    }
}
