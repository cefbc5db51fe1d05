//! Replication studies: repeated independently seeded runs of one method,
//! summarized by MSE, relative efficiency, coefficient of variation and
//! timing.
//!
//! Run `r` of a study seeded with `s` uses seed `derive_seed(s, r)`. Runs
//! execute in parallel and are collected in run order, so every statistic is
//! reproducible regardless of the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrands::BenchmarkProblem;
use crate::nis::Method;
use crate::queueing::{estimate_level_prob, QueueConfig, QueueMethod, QueueModel};
use crate::rng::derive_seed;

/// Column names of [`ReplicationReport::csv_row`].
pub const CSV_HEADER: &str = "problem,method,N,d,runs,estimate_mean,mse,re,cv,time_ms_mean,time_ms_median,seed";

/// Estimate and estimator wall-clock of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub estimate: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationReport {
    pub problem: String,
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Value the MSE is measured against: the oracle, or the runs' own mean
    /// when there is none.
    pub reference: f64,
    pub has_oracle: bool,
    pub records: Vec<RunRecord>,
}

impl ReplicationReport {
    pub fn new(
        problem: impl Into<String>,
        method: impl Into<String>,
        n: usize,
        d: usize,
        seed: u64,
        oracle: Option<f64>,
        records: Vec<RunRecord>,
    ) -> Self {
        let mean = records.iter().map(|r| r.estimate).sum::<f64>() / records.len() as f64;
        Self {
            problem: problem.into(),
            method: method.into(),
            n,
            d,
            seed,
            reference: oracle.unwrap_or(mean),
            has_oracle: oracle.is_some(),
            records,
        }
    }

    pub fn runs(&self) -> usize {
        self.records.len()
    }

    pub fn estimates(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.estimate)
    }

    pub fn mean(&self) -> f64 {
        self.estimates().sum::<f64>() / self.runs() as f64
    }

    /// Spread of the estimates around their mean, divisor `R`.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.estimates().map(|e| (e - m) * (e - m)).sum::<f64>() / self.runs() as f64
    }

    pub fn bias(&self) -> f64 {
        self.mean() - self.reference
    }

    /// Mean squared deviation from [`reference`](Self::reference); equals
    /// `variance + bias^2`.
    pub fn mse(&self) -> f64 {
        let r = self.reference;
        self.estimates().map(|e| (e - r) * (e - r)).sum::<f64>() / self.runs() as f64
    }

    /// Standard error of [`mean`](Self::mean), divisor `R - 1`.
    pub fn std_error(&self) -> f64 {
        let r = self.runs() as f64;
        (self.variance() * r / (r - 1.0) / r).sqrt()
    }

    /// Standard deviation (divisor `R - 1`) over mean.
    pub fn cv(&self) -> f64 {
        let r = self.runs() as f64;
        (self.variance() * r / (r - 1.0)).sqrt() / self.mean()
    }

    /// `MSE(baseline) / MSE(self)`.
    pub fn relative_efficiency(&self, baseline: &ReplicationReport) -> f64 {
        baseline.mse() / self.mse()
    }

    pub fn mean_time_secs(&self) -> f64 {
        self.records.iter().map(|r| r.elapsed_secs).sum::<f64>() / self.runs() as f64
    }

    pub fn median_time_secs(&self) -> f64 {
        let mut t: Vec<f64> = self.records.iter().map(|r| r.elapsed_secs).collect();
        t.sort_by(f64::total_cmp);
        let k = t.len();
        if k % 2 == 1 {
            t[k / 2]
        } else {
            0.5 * (t[k / 2 - 1] + t[k / 2])
        }
    }

    /// One CSV line in [`CSV_HEADER`] order. `re` and the timing columns
    /// are left empty when `None` / `timings == false`.
    pub fn csv_row(&self, re: Option<f64>, timings: bool) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        let ms = |s: f64| timings.then_some(s * 1e3);
        format!(
            "{},{},{},{},{},{:.12e},{:.6e},{},{},{},{},{}",
            self.problem,
            self.method,
            self.n,
            self.d,
            self.runs(),
            self.mean(),
            self.mse(),
            opt(re),
            opt(Some(self.cv())),
            opt(ms(self.mean_time_secs())),
            opt(ms(self.median_time_secs())),
            self.seed
        )
    }
}

/// MSE times mean run time; lower is better.
pub fn efficiency_product(report: &ReplicationReport) -> f64 {
    report.mse() * report.mean_time_secs()
}

/// Runs `run(derive_seed(master_seed, r))` for `r` in `0..runs` in parallel
/// and returns the records in run order.
pub fn run_replications<F>(runs: usize, master_seed: u64, run: F) -> Result<Vec<RunRecord>>
where
    F: Fn(u64) -> Result<RunRecord> + Sync,
{
    if runs < 2 {
        return Err(Error::InvalidArgument(format!("{runs} replications (need at least 2)")));
    }
    let results: Vec<Result<RunRecord>> = (0..runs)
        .into_par_iter()
        .map(|r| run(derive_seed(master_seed, r as u64)))
        .collect();
    let completed = results.iter().filter(|r| r.is_ok()).count();
    let mut records = Vec::with_capacity(runs);
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(rec) => records.push(rec),
            Err(e) => {
                return Err(Error::RunFailed {
                    run: r,
                    completed,
                    runs,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(records)
}

/// Replication study of `method` on a benchmark problem at budget `n`.
pub fn replicate_integration(
    bench: &BenchmarkProblem,
    method: Method,
    n: usize,
    runs: usize,
    seed: u64,
) -> Result<ReplicationReport> {
    let records = run_replications(runs, seed, |s| {
        let r = bench.run(method, n, s)?;
        Ok(RunRecord {
            estimate: r.estimate,
            elapsed_secs: r.elapsed_secs,
        })
    })?;
    Ok(ReplicationReport::new(
        bench.key.clone(),
        method.name(),
        n,
        bench.dim(),
        seed,
        Some(bench.oracle),
        records,
    ))
}

/// Replication study of a queueing estimator. `config.seed` is replaced
/// by the per-run seed; `oracle` is `None` unless the model has one.
pub fn replicate_queue(
    label: &str,
    model: &QueueModel,
    method: QueueMethod,
    config: &QueueConfig,
    runs: usize,
    seed: u64,
    oracle: Option<f64>,
) -> Result<ReplicationReport> {
    let records = run_replications(runs, seed, |s| {
        let mut c = config.clone();
        c.seed = s;
        let r = estimate_level_prob(model, method, &c)?;
        Ok(RunRecord {
            estimate: r.estimate,
            elapsed_secs: r.elapsed_secs,
        })
    })?;
    Ok(ReplicationReport::new(
        label,
        method.name(),
        config.periods,
        1,
        seed,
        oracle,
        records,
    ))
}
