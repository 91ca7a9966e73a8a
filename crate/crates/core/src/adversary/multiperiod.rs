//! Two providers with cyclic restaking, evaluated over one hyper-period
//! against a constrained adaptive adversary.

use std::collections::HashMap;

use thiserror::Error;

use crate::matching::{run_sequence, Algorithm, GsmFallback, PoolEntry};
use crate::money::Money;

/// Largest hyper-period the exhaustive search accepts.
pub const HYPER_PERIOD_LIMIT: u32 = 60;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("stakes must satisfy long > short >= 2, got ({short}, {long})")]
    InvalidStakes { short: u32, long: u32 },
    #[error("hyper-period {0} exceeds the search limit of {HYPER_PERIOD_LIMIT}")]
    SizeLimit(u32),
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

/// Remaining stake at `t` under cyclic restaking: `-t mod stake` in `1..=stake`.
pub fn cyclic_remaining(t: u32, stake: u32) -> u32 {
    match t % stake {
        0 => stake,
        r => stake - r,
    }
}

/// Times in one hyper-period where the long provider has exactly one hour
/// more left than the short one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gap1Window {
    pub short: u32,
    pub long: u32,
    pub hyper_period: u32,
    pub times: Vec<u32>,
}

impl Gap1Window {
    pub fn coprime(&self) -> bool {
        gcd(self.short, self.long) == 1
    }

    /// `(start, length)` when the times form one cyclically contiguous block.
    pub fn block(&self) -> Option<(u32, u32)> {
        let l = self.hyper_period;
        let inside = |t: u32| self.times.binary_search(&t).is_ok();
        let starts: Vec<u32> = self.times.iter().copied().filter(|&t| !inside((t + l - 1) % l)).collect();
        match starts.as_slice() {
            [s] => Some((*s, self.times.len() as u32)),
            _ => None,
        }
    }

    /// Empty when the stakes share a factor, one block of `short` otherwise.
    pub fn matches_structure(&self) -> bool {
        if self.coprime() {
            self.block().map(|(_, len)| len) == Some(self.short)
        } else {
            self.times.is_empty()
        }
    }
}

pub fn gap1_window(short: u32, long: u32) -> Gap1Window {
    let hyper_period = lcm(short, long);
    let times = (0..hyper_period).filter(|&t| cyclic_remaining(t, long) == cyclic_remaining(t, short) + 1).collect();
    Gap1Window { short, long, hyper_period, times }
}

/// Limits on what the adversary may send. Both variants require one job per
/// idle provider, released residuals counted among them, and total length at
/// most the summed remaining time of the idle providers. The default also
/// caps each new job at the longest idle remaining time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AdversaryRules {
    /// Also cap every new job at the longest idle remaining time.
    pub cap_at_longest: bool,
}

impl AdversaryRules {
    pub const BUDGET_ONLY: AdversaryRules = AdversaryRules { cap_at_longest: false };
    pub const CAPPED: AdversaryRules = AdversaryRules { cap_at_longest: true };
}

impl Default for AdversaryRules {
    fn default() -> Self {
        Self::CAPPED
    }
}

/// Exhaustive result for one matcher.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub max_infeasible: u32,
    /// Largest number of infeasible matches seen in one period on any
    /// legal schedule.
    pub max_per_period: u32,
    /// Schedules that put two infeasible matches on one provider within a
    /// single restake cycle.
    pub cycle_violations: u64,
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoProviderReport {
    pub short: u32,
    pub long: u32,
    pub rules: AdversaryRules,
    pub hyper_period: u32,
    pub coprime: bool,
    pub cfm: SearchOutcome,
    pub gsm: SearchOutcome,
    pub window: Gap1Window,
}

impl TwoProviderReport {
    pub fn excess(&self) -> i64 {
        self.cfm.max_infeasible as i64 - self.gsm.max_infeasible as i64
    }

    /// At most one extra when coprime, none otherwise, with the per-period
    /// and per-cycle limits intact.
    pub fn holds(&self) -> bool {
        let excess_ok = if self.coprime { self.excess() <= 1 } else { self.excess() <= 0 };
        excess_ok
            && self.window.matches_structure()
            && [&self.cfm, &self.gsm].iter().all(|o| o.max_per_period <= 1 && o.cycle_violations == 0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct State {
    t: u32,
    busy: [u32; 2],
    residual: [u32; 2],
    flagged: [bool; 2],
}

struct Search {
    stakes: [u32; 2],
    algo: Algorithm,
    cap_at_longest: bool,
    horizon: u32,
    memo: HashMap<State, Option<u32>>,
    max_per_period: u32,
    cycle_violations: u64,
}

impl Search {
    fn remaining(&self, i: usize, t: u32) -> u32 {
        cyclic_remaining(t, self.stakes[i])
    }

    fn run(&mut self, s: State) -> Option<u32> {
        if s.t == self.horizon {
            return Some(0);
        }
        if let Some(&v) = self.memo.get(&s) {
            return v;
        }
        let v = self.expand(s);
        self.memo.insert(s, v);
        v
    }

    fn expand(&mut self, mut s: State) -> Option<u32> {
        let t = s.t;
        for i in 0..2 {
            if t.is_multiple_of(self.stakes[i]) {
                s.flagged[i] = false;
            }
        }
        let idle: Vec<usize> = (0..2).filter(|&i| s.busy[i] == 0).collect();
        let mut released = Vec::new();
        for &i in &idle {
            if s.residual[i] > 0 {
                released.push(s.residual[i]);
                s.residual[i] = 0;
            }
        }
        let budget: u32 = idle.iter().map(|&i| self.remaining(i, t)).sum();
        let fixed: u32 = released.iter().sum();
        if fixed > budget {
            return None;
        }
        let spare = budget - fixed;
        let longest = idle.iter().map(|&i| self.remaining(i, t)).max().unwrap_or(0);
        let cap = if self.cap_at_longest { longest } else { u32::MAX };
        let mut batches: Vec<Vec<u32>> = Vec::new();
        match idle.len() - released.len() {
            0 => batches.push(released.clone()),
            1 => {
                for w in 1..=spare.min(cap) {
                    batches.push([released.as_slice(), &[w]].concat());
                }
            }
            _ => {
                for a in 1..=spare.min(cap) {
                    for b in a..=spare.saturating_sub(a).min(cap) {
                        batches.push(vec![a, b]);
                    }
                }
            }
        }
        let pool: Vec<PoolEntry> = idle
            .iter()
            .map(|&i| PoolEntry::new(i as u32, self.remaining(i, t), Money::from_ticks(2 - i as u64)))
            .collect();
        let mut best: Option<u32> = None;
        for batch in batches {
            let mut orders = vec![batch.clone()];
            if batch.len() == 2 && batch[0] != batch[1] {
                orders.push(vec![batch[1], batch[0]]);
            }
            for order in orders {
                let result = run_sequence(self.algo, &pool, &order);
                let mut next = s;
                let mut now = 0;
                for (outcome, &w) in result.outcomes.iter().zip(&order) {
                    let p = outcome.provider().expect("one job per idle provider");
                    let i = p.id as usize;
                    if w <= p.tau {
                        next.busy[i] = w;
                    } else {
                        now += 1;
                        if next.flagged[i] {
                            self.cycle_violations += 1;
                        }
                        next.flagged[i] = true;
                        next.busy[i] = p.tau;
                        next.residual[i] = w - p.tau;
                    }
                }
                self.max_per_period = self.max_per_period.max(now);
                next.t = t + 1;
                for b in next.busy.iter_mut() {
                    *b = b.saturating_sub(1);
                }
                if let Some(rest) = self.run(next) {
                    best = Some(best.map_or(now + rest, |b| b.max(now + rest)));
                }
            }
        }
        best
    }
}

/// Most infeasible matches a constrained adversary can force on `algo`
/// over one hyper-period. The long provider is the cheaper one.
pub fn two_provider_adversary_search(
    short: u32,
    long: u32,
    algo: Algorithm,
    rules: AdversaryRules,
) -> Result<SearchOutcome, SearchError> {
    if !(long > short && short >= 2) {
        return Err(SearchError::InvalidStakes { short, long });
    }
    let horizon = lcm(short, long);
    if horizon > HYPER_PERIOD_LIMIT {
        return Err(SearchError::SizeLimit(horizon));
    }
    let mut search = Search {
        stakes: [short, long],
        algo,
        cap_at_longest: rules.cap_at_longest,
        horizon,
        memo: HashMap::new(),
        max_per_period: 0,
        cycle_violations: 0,
    };
    let start = State { t: 0, busy: [0; 2], residual: [0; 2], flagged: [false; 2] };
    let best = search.run(start).unwrap_or(0);
    Ok(SearchOutcome {
        max_infeasible: best,
        max_per_period: search.max_per_period,
        cycle_violations: search.cycle_violations,
        states: search.memo.len(),
    })
}

/// Cheapest-feasible against shortest-feasible with longest fallback.
pub fn compare_two_provider(short: u32, long: u32, rules: AdversaryRules) -> Result<TwoProviderReport, SearchError> {
    let cfm = two_provider_adversary_search(short, long, Algorithm::Cfm, rules)?;
    let gsm = two_provider_adversary_search(short, long, Algorithm::Gsm(GsmFallback::Longest), rules)?;
    let window = gap1_window(short, long);
    Ok(TwoProviderReport {
        short,
        long,
        rules,
        hyper_period: window.hyper_period,
        coprime: window.coprime(),
        cfm,
        gsm,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap1_examples() {
        let w = gap1_window(2, 3);
        assert_eq!(w.hyper_period, 6);
        assert_eq!(w.times, vec![0, 1]);
        assert_eq!(w.block(), Some((0, 2)));
        assert!(gap1_window(2, 4).times.is_empty());
        assert_eq!(gap1_window(3, 5).block().map(|b| b.1), Some(3));
    }

    #[test]
    fn uncapped_jobs_break_the_short_stake_case() {
        let capped = compare_two_provider(2, 4, AdversaryRules::CAPPED).unwrap();
        assert!(capped.holds());
        let loose = compare_two_provider(2, 4, AdversaryRules::BUDGET_ONLY).unwrap();
        assert_eq!((loose.cfm.max_infeasible, loose.gsm.max_infeasible), (2, 1));
        assert!(!loose.holds());
    }

    #[test]
    fn rejects_bad_stakes() {
        assert!(two_provider_adversary_search(3, 3, Algorithm::Cfm, AdversaryRules::default()).is_err());
        assert_eq!(
            two_provider_adversary_search(7, 11, Algorithm::Cfm, AdversaryRules::default()),
            Err(SearchError::SizeLimit(77))
        );
    }
}
