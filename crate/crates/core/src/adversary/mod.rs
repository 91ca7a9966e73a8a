//! Regret metrics, tight-instance constructors, constrained-adversary
//! searches and incentive simulations.

use crate::matching::{run_sequence, Algorithm, GsmFallback, PoolEntry};
use crate::money::Money;

mod incentive;
mod multiperiod;
mod peel;

pub use incentive::{
    bootstrap_mean_ci, compare_reports, competitive_trial, delay_dominance, incentive_best_response, monopoly_check,
    stake_early_identity, CompetitiveScenario, DelayReport, IdentityCheck, IncentiveCurve, PairedComparison,
};
pub use multiperiod::{
    compare_two_provider, cyclic_remaining, gap1_window, two_provider_adversary_search, AdversaryRules, Gap1Window,
    SearchError, SearchOutcome, TwoProviderReport, HYPER_PERIOD_LIMIT,
};
pub use peel::{anti_sorted_instances, peel_and_load, peel_brute_force, PeelError, PeelReport, BRUTE_FORCE_LIMIT};

/// A single-period matching instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub pool: Vec<PoolEntry>,
    /// Job lengths in arrival order.
    pub jobs: Vec<u32>,
    pub price: Money,
    pub floor: Money,
}

impl Instance {
    pub fn m(&self) -> usize {
        self.pool.len()
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }
}

const GSM: Algorithm = Algorithm::Gsm(GsmFallback::Reject);

/// Matched cost minus the greedy-cheapest cost, in ticks.
pub fn s_regret(inst: &Instance, algo: Algorithm) -> i64 {
    let cost = run_sequence(algo, &inst.pool, &inst.jobs).cost();
    let base = run_sequence(Algorithm::Gcm, &inst.pool, &inst.jobs).cost();
    cost.diff(base)
}

/// Feasible matches of shortest-feasible (reject mode) minus those of `algo`.
/// Infeasible fallback matches count as misses.
pub fn d_regret(inst: &Instance, algo: Algorithm) -> i64 {
    let reference = run_sequence(GSM, &inst.pool, &inst.jobs).feasible() as i64;
    reference - run_sequence(algo, &inst.pool, &inst.jobs).feasible() as i64
}

/// Worst-case cost excess of cheapest-feasible over greedy-cheapest.
pub fn supply_regret_bound(m: usize, n: usize, price: Money, floor: Money) -> Money {
    let gap = price.saturating_sub(floor);
    if gap == Money::ZERO || n >= m {
        Money::ZERO
    } else if n <= m / 2 {
        gap * n as u64
    } else {
        gap * (m - n) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegretReport {
    pub matcher: Algorithm,
    pub s_regret: i64,
    pub d_regret: i64,
    pub s_bound: Money,
    pub d_bound: i64,
    pub bound_satisfied: bool,
}

pub fn regret_report(inst: &Instance, algo: Algorithm) -> RegretReport {
    let s = s_regret(inst, algo);
    let d = d_regret(inst, algo);
    let s_bound = supply_regret_bound(inst.m(), inst.n(), inst.price, inst.floor);
    let d_bound = (inst.n() / 2) as i64;
    RegretReport {
        matcher: algo,
        s_regret: s,
        d_regret: d,
        s_bound,
        d_bound,
        bound_satisfied: s <= s_bound.ticks() as i64 && d <= d_bound,
    }
}

/// `k` anti-sorted pairs of a short, dear provider (one hour left) and a
/// long, cheap one (two hours). The `k` easy one-hour jobs arrive first and
/// then the `k` two-hour threshold jobs. Shortest-feasible serves all `2k`;
/// cheapest-feasible spends every long provider on an easy job and can
/// finish none of the threshold jobs.
pub fn build_tight_pair_instance(k: u32) -> Instance {
    assert!(k >= 1, "at least one pair");
    let k64 = k as u64;
    let shorts = (0..k).map(|j| PoolEntry::new(j, 1, Money::from_ticks(4 + k64 + j as u64)));
    let longs = (0..k).map(|j| PoolEntry::new(k + j, 2, Money::from_ticks(3 + j as u64)));
    let pool: Vec<PoolEntry> = shorts.chain(longs).collect();
    let jobs: Vec<u32> = (0..2 * k).map(|i| if i < k { 1 } else { 2 }).collect();
    Instance { pool, jobs, price: Money::from_ticks(3 + 2 * k64), floor: Money::from_ticks(3) }
}

/// The same construction with costs increasing in staking time.
pub fn build_sorted_pair_instance(k: u32) -> Instance {
    let mut inst = build_tight_pair_instance(k);
    let mut costs: Vec<Money> = inst.pool.iter().map(|p| p.cost).collect();
    costs.reverse();
    for (p, c) in inst.pool.iter_mut().zip(costs) {
        p.cost = c;
    }
    inst
}
