//! Peel-and-load thresholds for a one-shot adversary that sends exactly one
//! job per provider under a total length budget equal to the summed capacity.

use std::collections::HashMap;

use thiserror::Error;

use crate::matching::{new_matcher, Algorithm, PoolEntry};
use crate::money::Money;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PeelError {
    #[error("capacity list is empty")]
    Empty,
    #[error("capacities must be sorted descending, position {0} breaks the order")]
    Unsorted(usize),
    #[error("capacity {tau} at position {index} is below 2")]
    TooShort { index: usize, tau: u32 },
    #[error("brute force is limited to {BRUTE_FORCE_LIMIT} providers, got {0}")]
    TooMany(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeelReport {
    pub taus: Vec<u32>,
    /// Cumulative saves after peeling `i + 1` providers.
    pub saves_cfm: Vec<i64>,
    pub saves_gsm: Vec<i64>,
    pub threshold_cfm: Option<usize>,
    pub threshold_gsm: Option<usize>,
}

impl PeelReport {
    pub fn m(&self) -> usize {
        self.taus.len()
    }

    pub fn u_max_cfm(&self) -> Option<usize> {
        self.threshold_cfm.map(|i| self.m() - i)
    }

    pub fn u_max_gsm(&self) -> Option<usize> {
        self.threshold_gsm.map(|i| self.m() - i)
    }
}

fn validate(taus: &[u32]) -> Result<(), PeelError> {
    if taus.is_empty() {
        return Err(PeelError::Empty);
    }
    if let Some((index, &tau)) = taus.iter().enumerate().find(|(_, &t)| t < 2) {
        return Err(PeelError::TooShort { index, tau });
    }
    if let Some(i) = (1..taus.len()).find(|&i| taus[i] > taus[i - 1]) {
        return Err(PeelError::Unsorted(i));
    }
    Ok(())
}

fn threshold(saves: &[i64]) -> Option<usize> {
    let m = saves.len() as i64;
    (1..=saves.len()).find(|&i| saves[i - 1] >= m - i as i64)
}

/// Evaluates both save sequences as written (GSM saves may be negative)
/// and the smallest peel count that funds overloading everyone else.
pub fn peel_and_load(taus: &[u32]) -> Result<PeelReport, PeelError> {
    validate(taus)?;
    let next = |j: usize| taus.get(j + 1).copied().unwrap_or(1) as i64;
    let mut saves_cfm = Vec::with_capacity(taus.len());
    let mut saves_gsm = Vec::with_capacity(taus.len());
    let (mut c, mut g) = (0i64, 0i64);
    for (j, &tau) in taus.iter().enumerate() {
        c += tau as i64 - 1;
        g += tau as i64 - next(j) - 1;
        saves_cfm.push(c);
        saves_gsm.push(g);
    }
    Ok(PeelReport {
        taus: taus.to_vec(),
        threshold_cfm: threshold(&saves_cfm),
        threshold_gsm: threshold(&saves_gsm),
        saves_cfm,
        saves_gsm,
    })
}

pub const BRUTE_FORCE_LIMIT: usize = 16;

/// Most infeasible matches an adversary can force on `algo` with one job per
/// provider, every job at least one hour, and total length at most the
/// summed capacity. Longer providers are cheaper.
pub fn peel_brute_force(taus: &[u32], algo: Algorithm) -> Result<usize, PeelError> {
    validate(taus)?;
    if taus.len() > BRUTE_FORCE_LIMIT {
        return Err(PeelError::TooMany(taus.len()));
    }
    let top = *taus.iter().max().expect("nonempty") as u64;
    let pool: Vec<PoolEntry> = taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| PoolEntry::new(i as u32, tau, Money::from_ticks(top + 1 - tau as u64)))
        .collect();
    let budget: u32 = taus.iter().sum();
    let mut memo = HashMap::new();
    Ok(search(&pool, algo, 0, budget, &mut memo))
}

fn search(pool: &[PoolEntry], algo: Algorithm, used: u32, budget: u32, memo: &mut HashMap<(u32, u32), usize>) -> usize {
    let left: Vec<PoolEntry> = pool.iter().filter(|p| used & (1 << p.id) == 0).copied().collect();
    if left.is_empty() {
        return 0;
    }
    if let Some(&v) = memo.get(&(used, budget)) {
        return v;
    }
    let mut best = 0;
    let reserve = left.len() as u32 - 1;
    for w in 1..=budget.saturating_sub(reserve) {
        let mut matcher = new_matcher(algo, &left, Money::ZERO);
        let Some(p) = matcher.match_job(w).provider() else {
            continue;
        };
        let miss = usize::from(w > p.tau);
        best = best.max(miss + search(pool, algo, used | 1 << p.id, budget - w, memo));
    }
    memo.insert((used, budget), best);
    best
}

/// All descending capacity lists with entries in `2..=max_tau` and length
/// `1..=max_m`.
pub fn anti_sorted_instances(max_m: usize, max_tau: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>, max_m: usize, cap: u32) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max_m {
            return;
        }
        for tau in 2..=cap {
            cur.push(tau);
            rec(cur, out, max_m, tau);
            cur.pop();
        }
    }
    rec(&mut cur, &mut out, max_m, max_tau);
    out
}
