//! Monte Carlo engine: finite-sample null law, critical values, p-values and
//! power.
//!
//! Replicate `i` of any loop draws from stream `i` of the seeded generator
//! and writes to slot `i` of the result buffer, so outputs do not depend on
//! the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alternatives::AlternativeSpec;
use crate::empirical::{DistMeta, EmpiricalDist};
use crate::error::{Error, Result};
use crate::rng::{standard_normals, GENERATOR_NAME};
use crate::sample::{Sample, TestConfig};
use crate::stat::statistic;
use crate::tolerances::{MIN_REPS, MIN_SAMPLE_SIZE};

/// Default grids for critical-value tables.
pub const DEFAULT_N_GRID: [usize; 6] = [10, 20, 50, 100, 200, 500];
pub const DEFAULT_BETA_GRID: [f64; 3] = [2.5, 3.0, 5.0];
pub const DEFAULT_ALPHA_GRID: [f64; 3] = [0.10, 0.05, 0.01];
pub const DEFAULT_REPS: usize = 10_000;

fn check_n_reps(n: usize, reps: usize) -> Result<()> {
    if n < MIN_SAMPLE_SIZE {
        return Err(Error::DomainError(format!("need n >= {MIN_SAMPLE_SIZE}, got {n}")));
    }
    if reps < MIN_REPS {
        return Err(Error::DomainError(format!("need at least {MIN_REPS} replicates, got {reps}")));
    }
    Ok(())
}

/// Statistic of each replicate in index order.
fn replicate_statistics<F>(reps: usize, cfg: &TestConfig, draw: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|i| statistic(&Sample::new(draw(i)?)?, cfg))
        .collect()
}

/// `reps` replicates of the statistic over standard normal samples of size `n`.
pub fn simulate_null(n: usize, cfg: &TestConfig, reps: usize, seed: u64) -> Result<EmpiricalDist> {
    cfg.validate()?;
    check_n_reps(n, reps)?;
    let values = replicate_statistics(reps, cfg, |i| Ok(standard_normals(seed, i, n)))?;
    EmpiricalDist::from_replicates(
        values,
        seed,
        DistMeta {
            n: Some(n),
            beta: Some(cfg.beta),
            generator: GENERATOR_NAME.into(),
        },
    )
}

/// Empirical `(1 - alpha)` quantile.
pub fn critical_value(d: &EmpiricalDist, alpha: f64) -> Result<f64> {
    d.critical_value(alpha)
}

/// Add-one Monte Carlo p-value.
pub fn p_value_mc(d: &EmpiricalDist, observed: f64) -> Result<f64> {
    d.p_value(observed)
}

/// Fraction of `reps` samples from `a` whose statistic exceeds the null
/// critical value at level `alpha`.
pub fn power_estimate(
    a: &AlternativeSpec,
    n: usize,
    cfg: &TestConfig,
    alpha: f64,
    reps: usize,
    seed: u64,
    null_dist: &EmpiricalDist,
) -> Result<f64> {
    cfg.validate()?;
    let meta = null_dist.meta();
    if meta.n != Some(n) || meta.beta != Some(cfg.beta) {
        return Err(Error::MismatchedConfig(format!(
            "null distribution has (n, beta) = ({:?}, {:?}), requested ({n}, {})",
            meta.n, meta.beta, cfg.beta
        )));
    }
    if reps == 0 {
        return Err(Error::DomainError("power needs at least one replicate".into()));
    }
    let crit = null_dist.critical_value(alpha)?;
    let stats = replicate_statistics(reps, cfg, |i| a.draw(n, seed, i))?;
    let rejected = stats.iter().filter(|&&t| t > crit).count();
    Ok(rejected as f64 / reps as f64)
}

/// One row of a critical-value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CritRow {
    pub n: usize,
    pub beta: f64,
    pub alpha: f64,
    pub crit: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Critical values over an `(n, beta, alpha)` grid. Every `(n, beta)` cell is
/// simulated with the same master seed, so any row can be regenerated with
/// `simulate_null(n, beta, reps, seed)`.
pub fn critical_value_table(
    n_list: &[usize],
    beta_list: &[f64],
    alpha_list: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<CritRow>> {
    let mut rows = Vec::with_capacity(n_list.len() * beta_list.len() * alpha_list.len());
    for &n in n_list {
        for &beta in beta_list {
            let cfg = TestConfig::new(beta)?;
            let d = simulate_null(n, &cfg, reps, seed)?;
            for &alpha in alpha_list {
                rows.push(CritRow {
                    n,
                    beta,
                    alpha,
                    crit: d.critical_value(alpha)?,
                    reps,
                    seed,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with header `n,beta,alpha,crit,reps,seed`.
pub fn crit_table_csv(rows: &[CritRow]) -> String {
    let mut out = String::from("n,beta,alpha,crit,reps,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.17e},{},{}\n",
            r.n, r.beta, r.alpha, r.crit, r.reps, r.seed
        ));
    }
    out
}
