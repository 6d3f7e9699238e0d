use rayon::prelude::*;
use survbal_core::Executor;

/// Executor backed by a dedicated rayon pool.
pub struct ThreadPool {
    pool: rayon::ThreadPool,
}

impl ThreadPool {
    pub fn new(threads: usize) -> anyhow::Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(ThreadPool { pool })
    }
}

impl Executor for ThreadPool {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

/// Either the calling thread or a pool, chosen from `--threads`.
pub enum Runner {
    Sequential(survbal_core::Sequential),
    Pool(ThreadPool),
}

impl Runner {
    pub fn new(threads: usize) -> anyhow::Result<Self> {
        Ok(if threads <= 1 { Runner::Sequential(survbal_core::Sequential) } else { Runner::Pool(ThreadPool::new(threads)?) })
    }
}

impl Executor for Runner {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Runner::Sequential(s) => s.map_indexed(n, f),
            Runner::Pool(p) => p.map_indexed(n, f),
        }
    }
}
