//! The period loop: quote, submit, match, settle, roll over.

use std::collections::BTreeMap;

use num_rational::Ratio;
use thiserror::Error;

use crate::demand::{self, DemandError};
use crate::matching::{new_matcher, Algorithm, MatchOutcome, PoolEntry};
use crate::model::{JobId, JobSpec, JobStatus, MatchEntry, MatchLedger, ProviderId, ProviderRecord, ProviderState};
use crate::money::Money;
use crate::payout::{Engagement, PayoutRow, Settlement};
use crate::pricing::{self, PricingError, PricingFunction, Quote};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BacklogMode {
    /// Unmatched users choose hours afresh at every new price.
    #[default]
    Reoptimize,
    /// Unmatched users keep their earlier choice while they can afford it.
    Keep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarketParams {
    /// Pricing function; its floor is the initial floor price.
    pub pricing: PricingFunction,
    pub horizon: u32,
    pub floor_window: usize,
    pub floor_update: bool,
    pub backlog: BacklogMode,
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("provider {provider} is assigned with no remaining stake at period {period}")]
    Inconsistent { provider: ProviderId, period: u32 },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("job {job}: {source}")]
    Demand { job: JobId, source: DemandError },
}

/// Everything observed in one period.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodReport {
    pub period: u32,
    pub floor: Money,
    pub price: Money,
    pub clamped: bool,
    /// `None` when demand met an empty floor supply.
    pub load: Option<Ratio<u64>>,
    pub floor_supply: u64,
    pub demand: u64,
    pub submitted: usize,
    pub rejected: usize,
    pub ledger: MatchLedger,
    pub max_matched_cost: Option<Money>,
    pub payouts: Vec<PayoutRow>,
    pub treasury_delta: i64,
    pub next_floor: Money,
}

impl PeriodReport {
    pub fn matched(&self) -> usize {
        self.ledger.pairs.len()
    }

    pub fn infeasible(&self) -> usize {
        self.ledger.infeasible()
    }
}

#[derive(Clone, Debug)]
pub struct MarketState {
    pub period: u32,
    pub providers: Vec<ProviderRecord>,
    pub jobs: Vec<JobSpec>,
    /// Arrived jobs awaiting a match, in queue order.
    pub pending: Vec<JobId>,
    pub posted_price: Money,
    pub floor: Money,
    pub history: Vec<PeriodReport>,
    pub engagements: Vec<Engagement>,
    pub settlement: Settlement,
    marginal_costs: Vec<Money>,
    job_index: BTreeMap<JobId, usize>,
}

impl MarketState {
    pub fn new(
        params: &MarketParams,
        mut providers: Vec<ProviderRecord>,
        jobs: Vec<JobSpec>,
    ) -> Result<Self, EngineError> {
        providers.sort_by_key(|p| p.id);
        if let Some(w) = providers.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(EngineError::DuplicateId { kind: "provider", id: w[0].id });
        }
        let mut job_index = BTreeMap::new();
        for (i, j) in jobs.iter().enumerate() {
            if job_index.insert(j.id, i).is_some() {
                return Err(EngineError::DuplicateId { kind: "job", id: j.id });
            }
        }
        Ok(MarketState {
            period: 0,
            providers,
            jobs,
            pending: Vec::new(),
            posted_price: params.pricing.floor,
            floor: params.pricing.floor,
            history: Vec::new(),
            engagements: Vec::new(),
            settlement: Settlement::new(),
            marginal_costs: Vec::new(),
            job_index,
        })
    }

    pub fn job(&self, id: JobId) -> &JobSpec {
        &self.jobs[self.job_index[&id]]
    }

    fn job_mut(&mut self, id: JobId) -> &mut JobSpec {
        let i = self.job_index[&id];
        &mut self.jobs[i]
    }

    pub fn provider(&self, id: ProviderId) -> Option<&ProviderRecord> {
        self.providers.binary_search_by_key(&id, |p| p.id).ok().map(|i| &self.providers[i])
    }

    /// Hours job `id` would buy at `price` this period.
    fn hours_at(&self, id: JobId, price: Money, mode: BacklogMode) -> Result<u32, EngineError> {
        let job = self.job(id);
        if job.status == JobStatus::Residual {
            return Ok(job.outstanding);
        }
        let left = job.time_left(self.period);
        if mode == BacklogMode::Keep {
            if let Some(w) = job.chosen_hours {
                if w <= left && price.ticks() > 0 && job.budget.ticks() / price.ticks() >= w as u64 {
                    return Ok(w);
                }
            }
        }
        demand::decide(&job.value, job.budget, left, job.min_run, price)
            .map(|d| d.hours)
            .map_err(|source| EngineError::Demand { job: id, source })
    }

    fn demand_at(&self, price: Money, mode: BacklogMode) -> Result<u64, EngineError> {
        let mut n = 0;
        for &id in &self.pending {
            if self.hours_at(id, price, mode)? > 0 {
                n += 1;
            }
        }
        Ok(n)
    }
}

fn quote(state: &MarketState, f: &PricingFunction, floor_supply: u64, mode: BacklogMode) -> Result<Quote, EngineError> {
    // Evaluate the population once per tick, surfacing the first user error.
    let mut curve = Vec::with_capacity((f.cap.ticks() - f.floor.ticks() + 1) as usize);
    for p in f.floor.ticks()..=f.cap.ticks() {
        curve.push(state.demand_at(Money::from_ticks(p), mode)? as f64);
    }
    let base = f.floor.ticks();
    let d = |p: Money| curve[(p.ticks() - base) as usize];
    match pricing::solve_equilibrium_quote(f, &d, floor_supply) {
        Ok(q) => Ok(q),
        // Demand with no floor supply: post the cap and flag it.
        Err(PricingError::NoFloorSupply { .. }) => Ok(Quote { price: f.cap, clamped: true }),
        Err(e) => Err(e.into()),
    }
}

/// Runs one period of the market.
pub fn advance_period(
    state: &mut MarketState,
    params: &MarketParams,
    algo: Algorithm,
) -> Result<PeriodReport, EngineError> {
    let t = state.period;
    for p in &state.providers {
        if p.state == ProviderState::Assigned && p.remaining == 0 {
            return Err(EngineError::Inconsistent { provider: p.id, period: t });
        }
    }
    let arrivals: Vec<JobId> = state.jobs.iter().filter(|j| j.arrival == t).map(|j| j.id).collect();
    state.pending.extend(arrivals);

    // 1. Floor supply and demand.
    let floor = state.floor;
    let f = PricingFunction { floor, ..params.pricing.clone() };
    let floor_supply = demand::aggregate_supply(&state.providers, t, floor);

    // 2. Price.
    let q = quote(state, &f, floor_supply, params.backlog)?;
    let price = q.price;
    state.posted_price = price;
    let demand_now = state.demand_at(price, params.backlog)?;
    let load = pricing::compute_load(demand_now, floor_supply).ok();

    // 3. Submission and matching.
    let mut submissions = Vec::new();
    for &id in &state.pending {
        let w = state.hours_at(id, price, params.backlog)?;
        if w > 0 {
            submissions.push((id, w));
        }
    }
    for &(id, w) in &submissions {
        let job = state.job_mut(id);
        if job.status == JobStatus::Pending {
            job.chosen_hours = Some(w);
        }
    }
    let mut pool = Vec::new();
    for p in state.providers.iter_mut().filter(|p| p.arrival <= t) {
        if matches!(p.state, ProviderState::Dormant | ProviderState::Idle) {
            p.state = if p.reported_cost <= price { ProviderState::Idle } else { ProviderState::Dormant };
            if p.state == ProviderState::Idle {
                pool.push(PoolEntry::new(p.id, p.remaining, p.reported_cost));
            }
        }
    }
    let mut matcher = new_matcher(algo, &pool, price);
    let mut ledger = MatchLedger::default();
    let mut rejected = 0;
    for &(id, w) in &submissions {
        match matcher.match_job(w) {
            MatchOutcome::Matched { provider, feasible } => {
                let hours = w.min(provider.tau);
                state.engagements.push(Engagement {
                    provider: provider.id,
                    job: id,
                    reported_cost: provider.cost,
                    price,
                    start: t,
                    hours,
                });
                let i = state.providers.binary_search_by_key(&provider.id, |p| p.id).expect("pooled provider");
                let p = &mut state.providers[i];
                p.state = ProviderState::Assigned;
                p.assigned_job = Some(id);
                p.match_start = Some(t);
                p.work_left = hours;
                let job = state.job_mut(id);
                job.status = JobStatus::Running;
                job.outstanding = w - hours;
                ledger.pairs.push(MatchEntry { provider: provider.id, job: id, period: t, price, feasible });
            }
            MatchOutcome::Rejected => rejected += 1,
            MatchOutcome::Empty => break,
        }
    }
    let matched: Vec<JobId> = ledger.pairs.iter().map(|m| m.job).collect();
    state.pending.retain(|id| !matched.contains(id));

    // Settle this hour.
    let active: Vec<Engagement> = state.engagements.iter().filter(|e| e.works_at(t)).copied().collect();
    let payouts = state.settlement.settle_hour(&active, t);
    let treasury_delta = payouts.iter().map(|r| r.treasury_delta).sum();

    // 4. Roll over.
    let mut finished = Vec::new();
    for p in state.providers.iter_mut().filter(|p| p.state == ProviderState::Assigned) {
        p.work_left -= 1;
        if p.work_left == 0 {
            finished.push(p.assigned_job.take().expect("assigned job"));
            p.match_start = None;
            p.state = ProviderState::Idle;
        }
    }
    for id in finished {
        let job = state.job_mut(id);
        if job.outstanding > 0 {
            job.status = JobStatus::Residual;
            state.pending.push(id);
        } else {
            job.status = JobStatus::Finished;
        }
    }
    for p in state.providers.iter_mut().filter(|p| p.is_staked_at(t)) {
        p.decay_and_restake();
    }
    let mut expired = Vec::new();
    for &id in &state.pending {
        let job = state.job(id);
        if job.status == JobStatus::Pending && job.time_left(t + 1) == 0 {
            expired.push(id);
        }
    }
    for &id in &expired {
        state.job_mut(id).status = JobStatus::Rejected;
    }
    state.pending.retain(|id| !expired.contains(id));

    let max_matched_cost =
        ledger.pairs.iter().map(|m| state.provider(m.provider).expect("matched provider").reported_cost).max();
    state.marginal_costs.push(max_matched_cost.unwrap_or(floor));
    if params.floor_update {
        state.floor = pricing::update_floor(&state.marginal_costs, params.floor_window).min(params.pricing.cap);
    }

    let report = PeriodReport {
        period: t,
        floor,
        price,
        clamped: q.clamped,
        load,
        floor_supply,
        demand: demand_now,
        submitted: submissions.len(),
        rejected,
        ledger,
        max_matched_cost,
        payouts,
        treasury_delta,
        next_floor: state.floor,
    };
    state.history.push(report.clone());
    state.period += 1;
    Ok(report)
}

/// Runs the configured horizon and returns the full history.
pub fn run(state: &mut MarketState, params: &MarketParams, algo: Algorithm) -> Result<Vec<PeriodReport>, EngineError> {
    while state.period < params.horizon {
        advance_period(state, params, algo)?;
    }
    Ok(state.history.clone())
}
