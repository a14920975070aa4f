//! Monte Carlo disorder experiments.
//!
//! Every sample `i` of a run draws its field from the stream `(seed, i)`.
//! Samples run on a fixed-size worker pool and are reduced in index order,
//! so results are identical for any worker count. A sample whose linear
//! algebra breaks down is excluded and counted; other errors abort the run.

mod decay;
mod ids;
mod msa;
mod wegner;

pub use decay::{combes_thomas_scan, regularity_survey, DecayScan, RegularityRow};
pub use ids::{
    dirichlet_monotonicity, free_ids_1d, ids_estimate, ids_for_sample, lifshitz_probe, lipschitz_modulus,
    IdsTable, LifshitzPoint, LifshitzSeries, MonotonicityReport,
};
pub use msa::{bracket3, msa_schedule, BracketRule, MsaParams, MsaSchedule};
pub use wegner::{
    eigenvalue_proximity, initial_scale_probability, wegner_experiment, ProbabilityEstimate, WegnerResult,
    WegnerRow,
};

use rayon::prelude::*;

use crate::error::{LabError, Result};

/// Outcome of a batch of independent samples, in sample order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch<T> {
    pub values: Vec<(u64, T)>,
    /// `(sample index, message)` of excluded samples.
    pub excluded: Vec<(u64, String)>,
}

impl<T> SampleBatch<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Fixed-size worker pool for sample loops.
pub struct Runner {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Runner {
    /// `workers = 0` uses the available parallelism.
    pub fn new(workers: usize) -> Result<Self> {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            workers
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| LabError::Resource(format!("cannot start {workers} workers: {e}")))?;
        Ok(Runner { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Evaluates `f` on sample indices `0..n`.
    pub fn map_samples<T, F>(&self, n: usize, f: F) -> Result<SampleBatch<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        let outcomes: Vec<(u64, Result<T>)> = self.pool.install(|| {
            (0..n as u64)
                .into_par_iter()
                .map(|i| (i, f(i)))
                .collect()
        });
        let mut batch = SampleBatch {
            values: Vec::with_capacity(n),
            excluded: Vec::new(),
        };
        for (i, outcome) in outcomes {
            match outcome {
                Ok(v) => batch.values.push((i, v)),
                Err(LabError::Numerical(msg)) => {
                    log::warn!("sample {i} excluded: {msg}");
                    batch.excluded.push((i, msg));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(batch)
    }

    /// Runs an arbitrary closure inside the pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}
