//! Domain records for providers and jobs.

use serde::{Deserialize, Serialize};

use crate::demand::ValueFunction;
use crate::money::Money;

pub type ProviderId = u32;
pub type JobId = u32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RestakePolicy {
    /// Availability runs down to zero and the provider leaves.
    #[default]
    None,
    /// Availability resets to the initial stake after reaching one.
    Cyclic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProviderState {
    Dormant,
    Idle,
    Assigned,
    /// Stake exhausted under [`RestakePolicy::None`]; no longer eligible.
    Withdrawn,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProviderRecord {
    pub id: ProviderId,
    pub true_cost: Money,
    pub reported_cost: Money,
    pub initial_stake: u32,
    pub remaining: u32,
    pub state: ProviderState,
    pub assigned_job: Option<JobId>,
    pub match_start: Option<u32>,
    pub restake: RestakePolicy,
    pub arrival: u32,
    /// Hours left on the current engagement.
    pub work_left: u32,
}

impl ProviderRecord {
    pub fn new(
        id: ProviderId,
        true_cost: Money,
        reported_cost: Money,
        stake: u32,
        restake: RestakePolicy,
        arrival: u32,
    ) -> Self {
        ProviderRecord {
            id,
            true_cost,
            reported_cost,
            initial_stake: stake,
            remaining: stake,
            state: ProviderState::Dormant,
            assigned_job: None,
            match_start: None,
            restake,
            arrival,
            work_left: 0,
        }
    }

    pub fn is_staked_at(&self, period: u32) -> bool {
        self.arrival <= period && self.state != ProviderState::Withdrawn
    }

    /// Reports below true cost are only legitimate in adversarial scenarios.
    pub fn underreports(&self) -> bool {
        self.reported_cost < self.true_cost
    }

    /// One period of availability decay, followed by a restake when the
    /// policy allows it.
    pub fn decay_and_restake(&mut self) {
        match self.restake {
            RestakePolicy::Cyclic => {
                self.remaining = if self.remaining <= 1 { self.initial_stake } else { self.remaining - 1 };
            }
            RestakePolicy::None => {
                self.remaining = self.remaining.saturating_sub(1);
                if self.remaining == 0 && self.state != ProviderState::Assigned {
                    self.state = ProviderState::Withdrawn;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JobStatus {
    Pending,
    Running,
    Finished,
    Rejected,
    /// Partially served by an infeasible match; waiting for the remainder.
    Residual,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobSpec {
    pub id: JobId,
    pub budget: Money,
    pub deadline: u32,
    pub min_run: u32,
    pub value: ValueFunction,
    pub arrival: u32,
    pub chosen_hours: Option<u32>,
    pub status: JobStatus,
    /// Hours still owed after an infeasible match.
    pub outstanding: u32,
}

impl JobSpec {
    pub fn new(id: JobId, budget: Money, deadline: u32, min_run: u32, value: ValueFunction, arrival: u32) -> Self {
        JobSpec {
            id,
            budget,
            deadline,
            min_run,
            value,
            arrival,
            chosen_hours: None,
            status: JobStatus::Pending,
            outstanding: 0,
        }
    }

    /// Periods left before the deadline, counting the current one.
    pub fn time_left(&self, period: u32) -> u32 {
        (self.arrival + self.deadline).saturating_sub(period)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchEntry {
    pub provider: ProviderId,
    pub job: JobId,
    pub period: u32,
    pub price: Money,
    pub feasible: bool,
}

/// Matches made in one period.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MatchLedger {
    pub pairs: Vec<MatchEntry>,
}

impl MatchLedger {
    /// Each provider and each job appears at most once.
    pub fn is_partial_bijection(&self) -> bool {
        let mut providers: Vec<_> = self.pairs.iter().map(|p| p.provider).collect();
        let mut jobs: Vec<_> = self.pairs.iter().map(|p| p.job).collect();
        providers.sort_unstable();
        jobs.sort_unstable();
        let before = (providers.len(), jobs.len());
        providers.dedup();
        jobs.dedup();
        before == (providers.len(), jobs.len())
    }

    pub fn infeasible(&self) -> usize {
        self.pairs.iter().filter(|p| !p.feasible).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provider(stake: u32, restake: RestakePolicy) -> ProviderRecord {
        ProviderRecord::new(0, Money::from_units(1), Money::from_units(1), stake, restake, 0)
    }

    #[test]
    fn decay_without_restake() {
        let mut p = provider(3, RestakePolicy::None);
        p.decay_and_restake();
        assert_eq!(p.remaining, 2);
        p.remaining = 1;
        p.decay_and_restake();
        assert_eq!(p.remaining, 0);
        assert_eq!(p.state, ProviderState::Withdrawn);
        assert!(!p.is_staked_at(5));
    }

    #[test]
    fn cyclic_restake_resets_at_one() {
        let mut p = provider(4, RestakePolicy::Cyclic);
        p.remaining = 1;
        p.decay_and_restake();
        assert_eq!(p.remaining, 4);
    }

    #[test]
    fn cyclic_residues_follow_negative_time() {
        for stake in 1..=9u32 {
            let mut p = provider(stake, RestakePolicy::Cyclic);
            for t in 0..(3 * stake) {
                let residue = (stake - t % stake) % stake;
                let expected = if residue == 0 { stake } else { residue };
                assert_eq!(p.remaining, expected, "stake {stake} t {t}");
                p.decay_and_restake();
            }
        }
    }
}
