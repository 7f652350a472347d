//! Thread-pool execution whose results do not depend on the thread count.
//!
//! Work is cut into fixed chunks of replications; chunk results are merged
//! in chunk order (integer counts) or collected in replication order.

use crate::error::{CliError, Result};
use hrtri_core::sim::{check_estimation_inputs, count_replications, ArrayConfig, EmpiricalJointCdf, GridPoint, JointCounts, MaximaSampler};
use rayon::prelude::*;

/// Replications per work unit. Changing it does not change results.
pub const CHUNK: u64 = 2048;

#[derive(Debug)]
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    /// `threads = None` uses all available cores.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        if threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
        Ok(Runner { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Parallel counterpart of `hrtri_core::sim::empirical_joint_cdf`, with
    /// identical output.
    pub fn empirical_joint_cdf(
        &self,
        config: &ArrayConfig,
        grid: &[GridPoint],
        replications: u64,
    ) -> hrtri_core::Result<EmpiricalJointCdf> {
        check_estimation_inputs(grid, replications)?;
        let sampler = MaximaSampler::new(config)?;
        let chunks: Vec<u64> = (0..replications.div_ceil(CHUNK)).collect();
        let parts: Vec<JointCounts> = self.pool.install(|| {
            chunks
                .par_iter()
                .map(|&c| {
                    let start = c * CHUNK;
                    count_replications(&sampler, grid, start..(start + CHUNK).min(replications))
                })
                .collect()
        });
        let counts = parts.iter().fold(JointCounts::zero(grid.len()), |acc, p| acc.merge(p));
        Ok(EmpiricalJointCdf::from_counts(sampler.norming(), grid, &counts))
    }

    /// `f(0), ..., f(count - 1)` evaluated in parallel, returned in order.
    pub fn map_indexed<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        self.pool.install(|| (0..count).into_par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hrtri_core::sim::{default_grid, empirical_joint_cdf};
    use hrtri_core::CorrelationProfile;

    #[test]
    fn matches_sequential_estimator() {
        let config = ArrayConfig::new(300, CorrelationProfile::linear(1.0, 1.0).unwrap(), 4).unwrap();
        let grid = default_grid();
        let seq = empirical_joint_cdf(&config, &grid, 5_000).unwrap();
        for threads in [1, 3] {
            let par = Runner::new(Some(threads)).unwrap().empirical_joint_cdf(&config, &grid, 5_000).unwrap();
            assert_eq!(seq, par);
        }
    }

    #[test]
    fn ordered_map() {
        let r = Runner::new(Some(2)).unwrap();
        assert_eq!(r.map_indexed(5, |i| i * i), vec![0, 1, 4, 9, 16]);
        assert!(Runner::new(Some(0)).is_err());
    }
}
