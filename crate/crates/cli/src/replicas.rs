//! Replica batches on a rayon pool.
//!
//! Replica `k` always draws from stream `k` of the batch seed and results are
//! gathered in replica order, so every output is independent of the thread
//! count.

use bcl_core::dynamics::{run_replica, Initial, RunParams};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{CliError, CliResult};

/// Replicas handed to a worker at a time.
const CHUNK: u64 = 1024;

/// A pool with `n_threads` workers; `0` means one per available core.
pub fn pool(n_threads: usize) -> CliResult<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n_threads)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start thread pool: {e}")))
}

/// `f(0), …, f(replicas − 1)` evaluated on `n_threads` workers, in order.
pub fn map_replicas<T, F>(replicas: u64, n_threads: usize, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> bcl_core::Result<T> + Sync,
{
    let pool = pool(n_threads)?;
    let out: bcl_core::Result<Vec<T>> = pool.install(|| (0..replicas).into_par_iter().map(&f).collect());
    Ok(out?)
}

/// What a batch of full runs keeps: the limit estimates and run totals.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub dim: usize,
    pub replicas: u64,
    /// Replica-major, `dim` coordinates per replica.
    pub xi: Vec<f64>,
    pub total_steps: u128,
    pub event_a: u64,
    pub event_a_prime: u64,
    pub converged: u64,
    pub absorbed: u64,
}

impl Batch {
    fn empty(dim: usize) -> Self {
        Batch {
            dim,
            replicas: 0,
            xi: Vec::new(),
            total_steps: 0,
            event_a: 0,
            event_a_prime: 0,
            converged: 0,
            absorbed: 0,
        }
    }

    fn append(&mut self, other: Batch) {
        self.replicas += other.replicas;
        self.xi.extend(other.xi);
        self.total_steps += other.total_steps;
        self.event_a += other.event_a;
        self.event_a_prime += other.event_a_prime;
        self.converged += other.converged;
        self.absorbed += other.absorbed;
    }

    /// Coordinate `c` of every replica's estimate.
    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        self.xi.iter().skip(c).step_by(self.dim).copied().collect()
    }

    pub fn mean_steps(&self) -> f64 {
        if self.replicas == 0 {
            0.0
        } else {
            self.total_steps as f64 / self.replicas as f64
        }
    }
}

/// Runs `replicas` independent trajectories and keeps their estimates.
pub fn simulate(params: &RunParams, initial: &Initial, replicas: u64, n_threads: usize) -> CliResult<Batch> {
    params.validate()?;
    let dim = params.dim;
    let chunks = replicas.div_ceil(CHUNK);
    let parts = map_replicas(chunks, n_threads, |c| {
        let mut part = Batch::empty(dim);
        for k in c * CHUNK..((c + 1) * CHUNK).min(replicas) {
            let r = run_replica(params, initial, k)?;
            part.replicas += 1;
            part.xi.extend_from_slice(&r.xi_estimate);
            part.total_steps += r.steps as u128;
            part.event_a += r.event_a_count;
            part.event_a_prime += r.event_a_prime_count;
            part.converged += r.converged as u64;
            part.absorbed += r.absorbed as u64;
        }
        Ok(part)
    })?;
    let mut batch = Batch::empty(dim);
    parts.into_iter().for_each(|p| batch.append(p));
    Ok(batch)
}
