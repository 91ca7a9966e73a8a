//! Pool-sharing settlement. A provider working at hour `h` earns its
//! reported cost plus an equal share of the premium pool formed by everyone
//! working at `h` who started no earlier than it did.

use std::collections::BTreeMap;

use num_rational::Ratio;
use thiserror::Error;

use crate::model::{JobId, ProviderId};
use crate::money::Money;

/// One provider serving one job for a contiguous run of hours at a price
/// locked when the match was made.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Engagement {
    pub provider: ProviderId,
    pub job: JobId,
    pub reported_cost: Money,
    pub price: Money,
    pub start: u32,
    pub hours: u32,
}

impl Engagement {
    pub fn works_at(&self, hour: u32) -> bool {
        hour >= self.start && hour < self.start + self.hours
    }

    fn premium(&self) -> i64 {
        self.price.diff(self.reported_cost)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PayoutError {
    #[error("provider {provider} is not working at hour {hour}")]
    NotWorking { provider: ProviderId, hour: u32 },
}

/// The cohort whose premiums provider `s` shares at hour `h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PremiumPoolView {
    pub hour: u32,
    pub anchor: u32,
    pub members: Vec<ProviderId>,
    /// Sum of `price - reported_cost` over the members, in ticks.
    pub pool: i64,
}

impl PremiumPoolView {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

fn engagement_at(ledger: &[Engagement], provider: ProviderId, hour: u32) -> Result<&Engagement, PayoutError> {
    ledger.iter().find(|e| e.provider == provider && e.works_at(hour)).ok_or(PayoutError::NotWorking { provider, hour })
}

pub fn premium_pool(ledger: &[Engagement], provider: ProviderId, hour: u32) -> Result<PremiumPoolView, PayoutError> {
    let own = engagement_at(ledger, provider, hour)?;
    let mut members = Vec::new();
    let mut pool = 0;
    for e in ledger.iter().filter(|e| e.works_at(hour) && e.start >= own.start) {
        members.push(e.provider);
        pool += e.premium();
    }
    members.sort_unstable();
    Ok(PremiumPoolView { hour, anchor: own.start, members, pool })
}

/// Exact payment in ticks: `ĉ_s + Π / n`.
pub fn hourly_payment(ledger: &[Engagement], provider: ProviderId, hour: u32) -> Result<Ratio<i64>, PayoutError> {
    let own = engagement_at(ledger, provider, hour)?;
    let view = premium_pool(ledger, provider, hour)?;
    Ok(Ratio::from_integer(own.reported_cost.ticks() as i64) + Ratio::new(view.pool, view.size() as i64))
}

/// Exact sum of hourly payments over every hour the provider worked.
pub fn total_return(ledger: &[Engagement], provider: ProviderId) -> Ratio<i64> {
    let mut total = Ratio::from_integer(0);
    for e in ledger.iter().filter(|e| e.provider == provider) {
        for h in e.start..e.start + e.hours {
            total += hourly_payment(ledger, provider, h).expect("engagement covers hour");
        }
    }
    total
}

/// Rounds half down to an integer tick.
pub fn round_half_down(x: Ratio<i64>) -> i64 {
    let q = x.floor();
    if x - q > Ratio::new(1, 2) {
        q.to_integer() + 1
    } else {
        q.to_integer()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PayoutRow {
    pub period: u32,
    pub provider: ProviderId,
    pub base: Money,
    pub premium_share: Money,
    pub paid: Money,
    pub cumulative: Money,
    /// What the user paid for this hour minus what the provider received,
    /// in ticks.
    pub treasury_delta: i64,
}

/// Tick-exact payout with per-provider carry of sub-tick remainders.
#[derive(Clone, Debug, Default)]
pub struct Settlement {
    carry: BTreeMap<ProviderId, Ratio<i64>>,
    cumulative: BTreeMap<ProviderId, Money>,
}

impl Settlement {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pays everyone working at `hour`, in provider id order.
    pub fn settle_hour(&mut self, ledger: &[Engagement], hour: u32) -> Vec<PayoutRow> {
        let mut working: Vec<&Engagement> = ledger.iter().filter(|e| e.works_at(hour)).collect();
        working.sort_by_key(|e| e.provider);
        let mut rows = Vec::with_capacity(working.len());
        for e in working {
            let exact = hourly_payment(ledger, e.provider, hour).expect("working provider");
            let carry = self.carry.entry(e.provider).or_insert_with(|| Ratio::from_integer(0));
            let amount = *carry + exact;
            let paid = round_half_down(amount).max(0);
            *carry = amount - Ratio::from_integer(paid);
            let paid = Money::from_ticks(paid as u64);
            let cumulative = self.cumulative.entry(e.provider).or_default();
            *cumulative += paid;
            rows.push(PayoutRow {
                period: hour,
                provider: e.provider,
                base: e.reported_cost,
                premium_share: paid.saturating_sub(e.reported_cost),
                paid,
                cumulative: *cumulative,
                treasury_delta: e.price.diff(paid),
            });
        }
        rows
    }

    pub fn carry(&self, provider: ProviderId) -> Ratio<i64> {
        self.carry.get(&provider).copied().unwrap_or_else(|| Ratio::from_integer(0))
    }

    pub fn cumulative(&self, provider: ProviderId) -> Money {
        self.cumulative.get(&provider).copied().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eng(provider: u32, cost: u64, price: u64, start: u32, hours: u32) -> Engagement {
        Engagement {
            provider,
            job: provider,
            reported_cost: Money::from_ticks(cost),
            price: Money::from_ticks(price),
            start,
            hours,
        }
    }

    #[test]
    fn solo_provider_earns_price() {
        let ledger = [eng(0, 4, 10, 0, 1)];
        assert_eq!(hourly_payment(&ledger, 0, 0), Ok(Ratio::from_integer(10)));
        assert_eq!(total_return(&ledger, 0), Ratio::from_integer(10));
    }

    #[test]
    fn same_cohort_splits_pool() {
        let ledger = [eng(0, 4, 10, 1, 2), eng(1, 6, 10, 1, 2)];
        assert_eq!(hourly_payment(&ledger, 0, 1), Ok(Ratio::from_integer(9)));
        assert_eq!(hourly_payment(&ledger, 1, 1), Ok(Ratio::from_integer(11)));
    }

    #[test]
    fn staggered_starts_anchor_pools() {
        let ledger = [eng(0, 4, 10, 1, 3), eng(1, 6, 10, 2, 2)];
        assert_eq!(hourly_payment(&ledger, 0, 2), Ok(Ratio::from_integer(9)));
        assert_eq!(hourly_payment(&ledger, 1, 2), Ok(Ratio::from_integer(10)));
        assert_eq!(premium_pool(&ledger, 1, 2).unwrap().members, vec![1]);
        assert_eq!(hourly_payment(&ledger, 1, 0), Err(PayoutError::NotWorking { provider: 1, hour: 0 }));
    }

    #[test]
    fn carry_stays_within_half_tick() {
        // Three-way split of a 1-tick pool: shares of 1/3 tick.
        let ledger = [eng(0, 9, 10, 0, 6), eng(1, 10, 10, 0, 6), eng(2, 10, 10, 0, 6)];
        let mut s = Settlement::new();
        let mut paid = 0;
        for h in 0..6 {
            for row in s.settle_hour(&ledger, h) {
                assert!(row.paid >= row.base);
                if row.provider == 1 {
                    paid += row.paid.ticks();
                }
            }
            for p in 0..3 {
                let c = s.carry(p);
                assert!(c > Ratio::new(-1, 2) && c <= Ratio::new(1, 2));
            }
        }
        assert_eq!(paid, 62);
    }

    #[test]
    fn half_down_rounding() {
        assert_eq!(round_half_down(Ratio::new(21, 2)), 10);
        assert_eq!(round_half_down(Ratio::new(106, 10)), 11);
        assert_eq!(round_half_down(Ratio::new(-1, 5)), 0);
    }
}
