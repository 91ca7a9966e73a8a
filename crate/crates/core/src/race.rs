//! Stake-and-tolerance race: pre-selected providers quote completion times,
//! the fastest quote wins and is paid for the quoted hours, and the stake is
//! forfeited if delivery falls outside the tolerance window.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::PoolEntry;
use crate::money::Money;
use crate::rng::stream;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceWindow {
    /// On time iff `|t - quote| <= epsilon`.
    #[default]
    TwoSided,
    /// On time iff `t <= quote + epsilon`; early delivery is never punished.
    OneSided,
}

impl ToleranceWindow {
    pub fn on_time(self, true_time: u32, quote: u32, epsilon: u32) -> bool {
        match self {
            ToleranceWindow::TwoSided => true_time.abs_diff(quote) <= epsilon,
            ToleranceWindow::OneSided => true_time <= quote + epsilon,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Racer {
    pub id: u32,
    /// Hours the racer actually needs.
    pub true_time: u32,
    pub quote: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceConfig {
    pub price: Money,
    pub stake: Money,
    pub epsilon: u32,
    #[serde(default)]
    pub window: ToleranceWindow,
    pub racers: Vec<Racer>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RaceError {
    #[error("race has no racers")]
    NoRacers,
    #[error("stake {stake} must exceed the largest possible reward {reward}")]
    InvalidStake { stake: Money, reward: Money },
    #[error("racer index {0} out of range")]
    UnknownRacer(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RaceOutcome {
    pub winner: u32,
    pub quote: u32,
    pub true_time: u32,
    pub paid: Money,
    pub stake_returned: bool,
    /// Payment minus any forfeited stake, in ticks.
    pub net: i64,
}

fn check_stake(stake: Money, price: Money, longest: u32) -> Result<(), RaceError> {
    let reward = price * longest as u64;
    if stake <= reward {
        return Err(RaceError::InvalidStake { stake, reward });
    }
    Ok(())
}

/// Net payoff in ticks of winning with `quote` when the work takes `true_time`.
pub fn winning_payoff(cfg: &RaceConfig, true_time: u32, quote: u32) -> i64 {
    let paid = (cfg.price * quote as u64).ticks() as i64;
    if cfg.window.on_time(true_time, quote, cfg.epsilon) {
        paid
    } else {
        paid - cfg.stake.ticks() as i64
    }
}

pub fn run_race(cfg: &RaceConfig) -> Result<RaceOutcome, RaceError> {
    let longest = cfg.racers.iter().map(|r| r.quote).max().ok_or(RaceError::NoRacers)?;
    check_stake(cfg.stake, cfg.price, longest)?;
    let w = cfg.racers.iter().min_by_key(|r| (r.quote, r.id)).expect("nonempty");
    let stake_returned = cfg.window.on_time(w.true_time, w.quote, cfg.epsilon);
    Ok(RaceOutcome {
        winner: w.id,
        quote: w.quote,
        true_time: w.true_time,
        paid: cfg.price * w.quote as u64,
        stake_returned,
        net: winning_payoff(cfg, w.true_time, w.quote),
    })
}

/// What the rest of the field looks like to one racer: the lowest rival
/// quote and whether a rival at that quote wins the id tie-break. Payoffs
/// depend on nothing else.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Alone,
    Lowest { quote: u32, wins_ties: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanResult {
    pub racer: u32,
    pub true_time: u32,
    pub epsilon: u32,
    pub grid: Vec<u32>,
    pub fields: Vec<Field>,
    /// `table[q][f]`: payoff of quoting `grid[q]` against `fields[f]`.
    pub table: Vec<Vec<i64>>,
    pub undominated: Vec<u32>,
}

impl ScanResult {
    pub fn within_window(&self) -> bool {
        self.undominated.iter().all(|&q| q + self.epsilon >= self.true_time && q <= self.true_time + self.epsilon)
    }

    pub fn lowest_undominated(&self) -> Option<u32> {
        self.undominated.first().copied()
    }
}

fn dominates(a: &[i64], b: &[i64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

/// Payoff table of racer `index` over `grid` against every field the other
/// racers could present with quotes on the same grid, and the quotes no
/// other grid quote weakly dominates.
pub fn best_response_scan(cfg: &RaceConfig, index: usize, grid: &[u32]) -> Result<ScanResult, RaceError> {
    let me = *cfg.racers.get(index).ok_or(RaceError::UnknownRacer(index))?;
    let longest = grid.iter().copied().max().ok_or(RaceError::NoRacers)?;
    check_stake(cfg.stake, cfg.price, longest)?;
    let mut fields = Vec::new();
    if cfg.racers.len() == 1 {
        fields.push(Field::Alone);
    } else {
        let lower = cfg.racers.iter().any(|r| r.id < me.id);
        let higher = cfg.racers.iter().any(|r| r.id > me.id);
        for &quote in grid {
            for (present, wins_ties) in [(lower, true), (higher, false)] {
                if present {
                    fields.push(Field::Lowest { quote, wins_ties });
                }
            }
        }
    }
    let table: Vec<Vec<i64>> = grid
        .iter()
        .map(|&q| {
            fields
                .iter()
                .map(|f| {
                    let wins = match *f {
                        Field::Alone => true,
                        Field::Lowest { quote, wins_ties } => q < quote || (q == quote && !wins_ties),
                    };
                    if wins {
                        winning_payoff(cfg, me.true_time, q)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    let mut undominated: Vec<u32> = (0..grid.len())
        .filter(|&i| !(0..grid.len()).any(|j| dominates(&table[j], &table[i])))
        .map(|i| grid[i])
        .collect();
    undominated.sort_unstable();
    Ok(ScanResult {
        racer: me.id,
        true_time: me.true_time,
        epsilon: cfg.epsilon,
        grid: grid.to_vec(),
        fields,
        table,
        undominated,
    })
}

/// The `n` cheapest providers priced at or under `price` whose remaining time
/// covers the largest job size. Ties go to lower id.
pub fn select_racers(pool: &[PoolEntry], n: usize, w_max: u32, price: Money) -> Vec<PoolEntry> {
    let mut eligible: Vec<PoolEntry> = pool.iter().filter(|p| p.tau >= w_max && p.cost <= price).copied().collect();
    eligible.sort_by_key(|p| (p.cost, p.id));
    eligible.truncate(n);
    eligible
}

/// Hour grid from 1 through `top`.
pub fn hour_grid(top: u32) -> Vec<u32> {
    (1..=top).collect()
}

/// Seeded race with 2 to 6 racers whose true times leave room for the
/// whole tolerance window on the grid. Quotes start truthful.
pub fn random_config(seed: u64, index: u64, epsilon: u32) -> (RaceConfig, Vec<u32>) {
    let mut rng = stream(seed, "race", index);
    let n = rng.random_range(2..=6u32);
    let racers = (0..n)
        .map(|id| {
            let t = rng.random_range(epsilon + 1..=epsilon + 10);
            Racer { id, true_time: t, quote: t }
        })
        .collect::<Vec<_>>();
    let top = racers.iter().map(|r| r.true_time).max().expect("nonempty") + epsilon + 2;
    let price = Money::from_ticks(rng.random_range(5..=30));
    let stake = price * top as u64 + Money::from_ticks(1);
    let cfg = RaceConfig { price, stake, epsilon, window: ToleranceWindow::TwoSided, racers };
    (cfg, hour_grid(top))
}
