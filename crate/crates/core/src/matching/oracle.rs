use std::collections::HashMap;

use thiserror::Error;

use super::PoolEntry;
use crate::money::Money;

/// Largest provider or job count the exhaustive oracles accept.
pub const ORACLE_LIMIT: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance with {providers} providers and {jobs} jobs exceeds the oracle limit of {ORACLE_LIMIT}")]
    SizeLimit { providers: usize, jobs: usize },
}

fn check(pool: &[PoolEntry], jobs: &[u32]) -> Result<(), OracleError> {
    if pool.len() > ORACLE_LIMIT || jobs.len() > ORACLE_LIMIT {
        return Err(OracleError::SizeLimit { providers: pool.len(), jobs: jobs.len() });
    }
    Ok(())
}

/// Most jobs that any partial bijection can serve feasibly.
pub fn oracle_max_feasible(pool: &[PoolEntry], jobs: &[u32]) -> Result<usize, OracleError> {
    check(pool, jobs)?;
    fn go(j: usize, used: u32, pool: &[PoolEntry], jobs: &[u32], memo: &mut HashMap<(usize, u32), usize>) -> usize {
        if j == jobs.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(j, used)) {
            return v;
        }
        let mut best = go(j + 1, used, pool, jobs, memo);
        for (i, p) in pool.iter().enumerate() {
            if used & (1 << i) == 0 && p.tau >= jobs[j] {
                best = best.max(1 + go(j + 1, used | (1 << i), pool, jobs, memo));
            }
        }
        memo.insert((j, used), best);
        best
    }
    Ok(go(0, 0, pool, jobs, &mut HashMap::new()))
}

/// Cheapest total reported cost when every job must take some provider
/// while any remain.
pub fn oracle_min_cost(pool: &[PoolEntry], jobs: &[u32]) -> Result<Money, OracleError> {
    check(pool, jobs)?;
    fn go(j: usize, used: u32, pool: &[PoolEntry], n: usize, memo: &mut HashMap<(usize, u32), u64>) -> u64 {
        if j == n || used.count_ones() as usize == pool.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(j, used)) {
            return v;
        }
        let best = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| used & (1 << i) == 0)
            .map(|(i, p)| p.cost.ticks() + go(j + 1, used | (1 << i), pool, n, memo))
            .min()
            .unwrap_or(0);
        memo.insert((j, used), best);
        best
    }
    Ok(Money::from_ticks(go(0, 0, pool, jobs.len(), &mut HashMap::new())))
}
