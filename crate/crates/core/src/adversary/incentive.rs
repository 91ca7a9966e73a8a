//! Monte Carlo checks of truthful cost reporting and early staking.

use num_rational::Ratio;
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::demand::ValueFunction;
use crate::engine::{run, BacklogMode, MarketParams, MarketState};
use crate::matching::{run_sequence, Algorithm, PoolEntry};
use crate::model::{JobSpec, ProviderRecord, RestakePolicy};
use crate::money::Money;
use crate::payout::{hourly_payment, total_return, Engagement};
use crate::pricing::PricingFunction;
use crate::rng::stream;

fn to_f64(x: Ratio<i64>) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Percentile bootstrap interval for the mean, at the given two-sided level.
pub fn bootstrap_mean_ci(samples: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = samples.len();
    let mut means: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, "bootstrap", r as u64);
            (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * resamples as f64) as usize).min(resamples - 1)];
    (at(tail), at(1.0 - tail))
}

/// Paired comparison of two strategies on common random numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedComparison {
    pub trials: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Mean of `a - b`.
    pub mean_diff: f64,
    pub ci: (f64, f64),
}

impl PairedComparison {
    pub fn from_pairs(a: &[f64], b: &[f64], seed: u64) -> Self {
        let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let n = diffs.len().max(1) as f64;
        PairedComparison {
            trials: diffs.len(),
            mean_a: a.iter().sum::<f64>() / n,
            mean_b: b.iter().sum::<f64>() / n,
            mean_diff: diffs.iter().sum::<f64>() / n,
            ci: bootstrap_mean_ci(&diffs, 2000, 0.95, seed),
        }
    }

    /// `a` beats `b` with the whole interval above zero.
    pub fn a_wins(&self) -> bool {
        self.ci.0 > 0.0
    }

    /// Neither side is separated from the other.
    pub fn inconclusive(&self) -> bool {
        self.ci.0 <= 0.0 && self.ci.1 >= 0.0
    }
}

/// One provider `s` among close-priced rivals for a batch of one-hour jobs
/// served cheapest first, all matched in the same period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompetitiveScenario {
    pub true_cost: Money,
    pub rivals: usize,
    /// Rival costs are uniform within this many ticks of `true_cost`.
    pub spread: u64,
    pub price: Money,
    pub min_jobs: usize,
    pub max_jobs: usize,
}

impl CompetitiveScenario {
    pub fn competitive() -> Self {
        CompetitiveScenario {
            true_cost: Money::from_ticks(50),
            rivals: 12,
            spread: 5,
            price: Money::from_ticks(60),
            min_jobs: 1,
            max_jobs: 12,
        }
    }

    /// A lone provider facing more jobs than it can take.
    pub fn monopoly() -> Self {
        CompetitiveScenario { rivals: 0, min_jobs: 2, max_jobs: 4, ..Self::competitive() }
    }

    /// Several providers but enough jobs that everyone is matched.
    pub fn uncontested() -> Self {
        CompetitiveScenario { rivals: 3, min_jobs: 4, max_jobs: 6, ..Self::competitive() }
    }
}

/// Realized utility (payment minus true cost, in ticks) of `s` reporting
/// `report` in trial `trial`. Rivals report truthfully.
pub fn competitive_trial(sc: &CompetitiveScenario, report: Money, seed: u64, trial: u64) -> f64 {
    let mut rng = stream(seed, "incentive", trial);
    let c = sc.true_cost.ticks();
    let lo = c.saturating_sub(sc.spread);
    let mut pool: Vec<PoolEntry> = (0..sc.rivals)
        .map(|i| PoolEntry::new(i as u32, 1, Money::from_ticks(rng.random_range(lo..=c + sc.spread))))
        .collect();
    let s = sc.rivals as u32;
    pool.push(PoolEntry::new(s, 1, report));
    pool.retain(|p| p.cost <= sc.price);
    let jobs = vec![1; rng.random_range(sc.min_jobs..=sc.max_jobs)];
    let result = run_sequence(Algorithm::Gcm, &pool, &jobs);
    let ledger: Vec<Engagement> = result
        .outcomes
        .iter()
        .enumerate()
        .filter_map(|(j, o)| o.provider().map(|p| (j, p)))
        .map(|(j, p)| Engagement {
            provider: p.id,
            job: j as u32,
            reported_cost: p.cost,
            price: sc.price,
            start: 0,
            hours: 1,
        })
        .collect();
    match hourly_payment(&ledger, s, 0) {
        Ok(pay) => to_f64(pay) - c as f64,
        Err(_) => 0.0,
    }
}

fn utilities(sc: &CompetitiveScenario, report: Money, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials as u64).into_par_iter().map(|t| competitive_trial(sc, report, seed, t)).collect()
}

/// Truthful reporting against `alt`, paired on the same rival draws.
pub fn compare_reports(sc: &CompetitiveScenario, alt: Money, trials: usize, seed: u64) -> PairedComparison {
    let truthful = utilities(sc, sc.true_cost, trials, seed);
    let other = utilities(sc, alt, trials, seed);
    PairedComparison::from_pairs(&truthful, &other, seed ^ 0x5eed)
}

/// Truthful against over-reporting by `excess` ticks in a scenario without
/// competition; the truthful edge disappears.
pub fn monopoly_check(sc: &CompetitiveScenario, excess: u64, trials: usize, seed: u64) -> PairedComparison {
    compare_reports(sc, sc.true_cost + Money::from_ticks(excess), trials, seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncentiveCurve {
    pub reports: Vec<Money>,
    pub means: Vec<f64>,
}

impl IncentiveCurve {
    pub fn best(&self) -> Option<Money> {
        self.means
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| self.reports[i])
    }
}

/// Mean utility for each candidate report on common random numbers.
pub fn incentive_best_response(
    sc: &CompetitiveScenario,
    reports: &[Money],
    trials: usize,
    seed: u64,
) -> IncentiveCurve {
    let means =
        reports.iter().map(|&r| utilities(sc, r, trials, seed).iter().sum::<f64>() / trials.max(1) as f64).collect();
    IncentiveCurve { reports: reports.to_vec(), means }
}

/// Early against late returns for one scripted schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityCheck {
    pub start: u32,
    pub tau: u32,
    pub delay: u32,
    pub early: Ratio<i64>,
    pub late: Ratio<i64>,
    /// Early return over the hours skipped by the late staker.
    pub prefix: Ratio<i64>,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.early - self.late == self.prefix
    }
}

/// Builds an over-demanded schedule where `s` is matched the moment it
/// stakes, and every other provider starts before `start` or at or after
/// `start + delay`. Compares staking at `start` for `tau` hours with staking
/// `delay` hours later for the remainder.
pub fn stake_early_identity(seed: u64, trial: u64, tau: u32, delay: u32) -> IdentityCheck {
    assert!(delay < tau, "delay must leave at least one staked hour");
    let mut rng = stream(seed, "identity", trial);
    let price = Money::from_ticks(rng.random_range(20..=40));
    let start = rng.random_range(1..=4u32);
    let s = 0;
    let reported = Money::from_ticks(rng.random_range(0..=price.ticks()));
    let mut others = Vec::new();
    for id in 1..=rng.random_range(3..=8u32) {
        let begin = if rng.random_bool(0.5) {
            rng.random_range(0..start)
        } else {
            rng.random_range(start + delay..=start + tau + 2)
        };
        others.push(Engagement {
            provider: id,
            job: id,
            reported_cost: Money::from_ticks(rng.random_range(0..=price.ticks())),
            price,
            start: begin,
            hours: rng.random_range(1..=6),
        });
    }
    let own = |begin: u32, hours: u32| Engagement {
        provider: s,
        job: 0,
        reported_cost: reported,
        price,
        start: begin,
        hours,
    };
    let mut early_ledger = others.clone();
    early_ledger.push(own(start, tau));
    let mut late_ledger = others;
    late_ledger.push(own(start + delay, tau - delay));
    let prefix = (start..start + delay).map(|h| hourly_payment(&early_ledger, s, h).expect("working")).sum();
    IdentityCheck {
        start,
        tau,
        delay,
        early: total_return(&early_ledger, s),
        late: total_return(&late_ledger, s),
        prefix,
    }
}

/// Mean net return of a provider that stakes `delay` hours into its window
/// in randomly generated markets, against staking immediately.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayReport {
    pub tau: u32,
    pub trials: usize,
    pub mean_returns: Vec<f64>,
    /// Early minus delayed, for each positive delay.
    pub comparisons: Vec<PairedComparison>,
    /// Trials where the delayed staker did strictly better.
    pub late_wins: Vec<usize>,
}

impl DelayReport {
    pub fn early_weakly_dominates(&self) -> bool {
        self.comparisons.iter().all(|c| c.mean_diff >= 0.0)
    }
}

const DELAY_HORIZON: u32 = 10;

fn delay_trial(seed: u64, trial: u64, tau: u32, delay: u32) -> f64 {
    let mut rng = stream(seed, "delay", trial);
    let pricing = PricingFunction::linear(1.0, Money::from_ticks(10), Money::from_ticks(20)).expect("valid pricing");
    let params = MarketParams {
        pricing,
        horizon: DELAY_HORIZON,
        floor_window: 3,
        floor_update: false,
        backlog: BacklogMode::Reoptimize,
    };
    let s_cost = Money::from_ticks(10);
    let mut providers = vec![ProviderRecord::new(0, s_cost, s_cost, tau - delay, RestakePolicy::None, delay)];
    for id in 1..=rng.random_range(3..=7u32) {
        let cost = Money::from_ticks(rng.random_range(7..=14));
        let stake = rng.random_range(2..=6);
        providers.push(ProviderRecord::new(id, cost, cost, stake, RestakePolicy::None, rng.random_range(0..=4)));
    }
    let gammas = [0.5, 0.7, 0.9];
    let jobs = (0..rng.random_range(4..=12u32))
        .map(|id| {
            let support = rng.random_range(2..=6);
            let value = ValueFunction::power(
                rng.random_range(15.0..40.0),
                *gammas.choose(&mut rng).expect("nonempty"),
                support,
            )
            .expect("valid value function");
            JobSpec::new(
                id,
                Money::from_ticks(rng.random_range(20..=80)),
                rng.random_range(3..=8),
                1,
                value,
                rng.random_range(0..=6),
            )
        })
        .collect();
    let mut state = MarketState::new(&params, providers, jobs).expect("unique ids");
    run(&mut state, &params, Algorithm::Cfm).expect("generated market runs");
    let hours: u32 = state.engagements.iter().filter(|e| e.provider == 0).map(|e| e.hours).sum();
    to_f64(total_return(&state.engagements, 0)) - (s_cost.ticks() * hours as u64) as f64
}

/// Runs every delay in `0..tau` on the same generated markets.
pub fn delay_dominance(tau: u32, trials: usize, seed: u64) -> DelayReport {
    let returns: Vec<Vec<f64>> =
        (0..tau).map(|d| (0..trials as u64).into_par_iter().map(|t| delay_trial(seed, t, tau, d)).collect()).collect();
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / trials.max(1) as f64;
    let comparisons = returns[1..].iter().map(|late| PairedComparison::from_pairs(&returns[0], late, seed)).collect();
    let late_wins =
        returns[1..].iter().map(|late| late.iter().zip(&returns[0]).filter(|(l, e)| l > e).count()).collect();
    DelayReport { tau, trials, mean_returns: returns.iter().map(mean).collect(), comparisons, late_wins }
}
