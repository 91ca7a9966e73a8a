//! Online matchers over a pool of idle providers, the deficiency formula and
//! brute-force oracles.
//!
//! Every matcher is deterministic. Ties go to lower cost, then shorter
//! staking time, then lower provider id, except where a matcher's own rule
//! orders differently (GSM ignores cost when choosing between staking times).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::ProviderId;
use crate::money::Money;

mod bucket;
mod deficiency;
mod multiset;
mod oracle;
mod segtree;

pub use bucket::BucketQueue;
pub use deficiency::{deficiency, Deficiency, SuffixRow};
pub use multiset::AvailabilityMultiset;
pub use oracle::{oracle_max_feasible, oracle_min_cost, OracleError, ORACLE_LIMIT};
pub use segtree::FeasibilityTree;

/// An idle provider as seen by a matcher.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PoolEntry {
    pub id: ProviderId,
    /// Remaining staking time.
    pub tau: u32,
    pub cost: Money,
}

impl PoolEntry {
    pub fn new(id: ProviderId, tau: u32, cost: Money) -> Self {
        PoolEntry { id, tau, cost }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchOutcome {
    Matched {
        provider: PoolEntry,
        feasible: bool,
    },
    /// Pool nonempty but the rule declined the job.
    Rejected,
    /// Pool exhausted.
    Empty,
}

impl MatchOutcome {
    pub fn provider(&self) -> Option<PoolEntry> {
        match self {
            MatchOutcome::Matched { provider, .. } => Some(*provider),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, MatchOutcome::Matched { feasible: true, .. })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GsmFallback {
    /// Reject a job nobody can finish.
    #[default]
    Reject,
    /// Hand it to the provider with the longest remaining time.
    Longest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Greedy cheapest.
    Gcm,
    /// Greedy shortest feasible.
    Gsm(GsmFallback),
    /// Cheapest feasible, falling back to the longest remaining provider.
    Cfm,
    /// Cheapest feasible, rejecting a job nobody can finish.
    CfmReject,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Gcm => "gcm",
            Algorithm::Gsm(GsmFallback::Reject) => "gsm",
            Algorithm::Gsm(GsmFallback::Longest) => "gsm-longest",
            Algorithm::Cfm => "cfm",
            Algorithm::CfmReject => "cfm-reject",
        }
    }

    /// Parses the `--algo` value, taking the GSM fallback separately.
    pub fn parse(algo: &str, fallback: GsmFallback) -> Result<Self, UnknownName> {
        match algo {
            "gcm" => Ok(Algorithm::Gcm),
            "gsm" => Ok(Algorithm::Gsm(fallback)),
            "cfm" => Ok(Algorithm::Cfm),
            "cfm-reject" => Ok(Algorithm::CfmReject),
            other => Err(UnknownName(other.to_string())),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unknown name `{0}`")]
pub struct UnknownName(pub String);

impl FromStr for GsmFallback {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reject" => Ok(GsmFallback::Reject),
            "longest" => Ok(GsmFallback::Longest),
            other => Err(UnknownName(other.to_string())),
        }
    }
}

pub trait Matcher {
    fn insert(&mut self, entry: PoolEntry);
    /// Serves one arriving job of `hours` hours, removing the chosen provider.
    fn match_job(&mut self, hours: u32) -> MatchOutcome;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Basic operations performed so far.
    fn ops(&self) -> u64;
}

/// Builds the pool structure for `algo`. `price` sizes the GCM bucket array.
pub fn new_matcher(algo: Algorithm, pool: &[PoolEntry], price: Money) -> Box<dyn Matcher> {
    match algo {
        Algorithm::Gcm => Box::new(BucketQueue::from_pool(pool, price)),
        Algorithm::Gsm(fallback) => Box::new(AvailabilityMultiset::from_pool(pool, fallback)),
        Algorithm::Cfm => Box::new(FeasibilityTree::from_pool(pool)),
        Algorithm::CfmReject => Box::new(FeasibilityTree::rejecting(pool)),
    }
}

/// Outcome of feeding one job sequence to a fresh matcher.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceResult {
    pub outcomes: Vec<MatchOutcome>,
}

impl SequenceResult {
    pub fn matched(&self) -> usize {
        self.outcomes.iter().filter(|o| o.provider().is_some()).count()
    }

    pub fn feasible(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_feasible()).count()
    }

    pub fn infeasible(&self) -> usize {
        self.matched() - self.feasible()
    }

    pub fn cost(&self) -> Money {
        self.outcomes.iter().filter_map(|o| o.provider()).map(|p| p.cost).sum()
    }
}

/// Runs `jobs` (hours, in arrival order) against a fresh pool.
pub fn run_sequence(algo: Algorithm, pool: &[PoolEntry], jobs: &[u32]) -> SequenceResult {
    let price = pool.iter().map(|p| p.cost).max().unwrap_or(Money::ZERO);
    let mut m = new_matcher(algo, pool, price);
    SequenceResult { outcomes: jobs.iter().map(|&w| m.match_job(w)).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(spec: &[(u32, u64)]) -> Vec<PoolEntry> {
        spec.iter()
            .enumerate()
            .map(|(i, &(tau, cost))| PoolEntry::new(i as u32, tau, Money::from_ticks(cost)))
            .collect()
    }

    fn first(algo: Algorithm, spec: &[(u32, u64)], w: u32) -> MatchOutcome {
        run_sequence(algo, &pool(spec), &[w]).outcomes[0]
    }

    #[test]
    fn gcm_ignores_feasibility() {
        let out = first(Algorithm::Gcm, &[(1, 5), (3, 7)], 2);
        assert_eq!(
            out,
            MatchOutcome::Matched { provider: PoolEntry::new(0, 1, Money::from_ticks(5)), feasible: false }
        );
        assert_eq!(first(Algorithm::Gcm, &[(2, 5), (4, 5)], 2).provider().unwrap().id, 0);
    }

    #[test]
    fn gsm_shortest_feasible_and_fallbacks() {
        assert_eq!(first(Algorithm::Gsm(GsmFallback::Reject), &[(1, 0), (2, 0), (3, 0)], 2).provider().unwrap().tau, 2);
        assert_eq!(first(Algorithm::Gsm(GsmFallback::Reject), &[(1, 0)], 2), MatchOutcome::Rejected);
        assert_eq!(
            first(Algorithm::Gsm(GsmFallback::Longest), &[(1, 0)], 2),
            MatchOutcome::Matched { provider: PoolEntry::new(0, 1, Money::ZERO), feasible: false }
        );
    }

    #[test]
    fn cfm_cheapest_feasible_and_fallback() {
        let out = first(Algorithm::Cfm, &[(1, 5), (2, 3), (9, 4)], 2);
        assert_eq!(out.provider().unwrap(), PoolEntry::new(1, 2, Money::from_ticks(3)));
        let fb = first(Algorithm::Cfm, &[(1, 5), (1, 3)], 2);
        assert_eq!(fb, MatchOutcome::Matched { provider: PoolEntry::new(1, 1, Money::from_ticks(3)), feasible: false });
    }

    #[test]
    fn empty_pool() {
        for algo in [Algorithm::Gcm, Algorithm::Gsm(GsmFallback::Reject), Algorithm::Cfm] {
            assert_eq!(run_sequence(algo, &[], &[1]).outcomes, vec![MatchOutcome::Empty]);
        }
    }
}
