//! User hour selection and aggregate demand/supply counts.
//!
//! Values are measured in ticks, so a surplus `v(w) - P*w` is exact integer
//! arithmetic.

use thiserror::Error;

use crate::model::{JobSpec, ProviderRecord};
use crate::money::Money;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DemandError {
    #[error("hour {w} outside value support 1..={support}")]
    OutOfSupport { w: u32, support: u32 },
    #[error("hour choice needs a positive price")]
    ZeroPrice,
    #[error("value function is not discretely concave")]
    NotConcave,
    #[error("invalid value function: {0}")]
    Invalid(String),
}

/// Tabulated value over integer hours, `values[w] = v(w)` with `v(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueFunction {
    values: Vec<i64>,
}

impl ValueFunction {
    /// Table of `v(1), v(2), ...`; `v(0) = 0` is implied.
    pub fn from_values(values: &[i64]) -> Self {
        let mut table = Vec::with_capacity(values.len() + 1);
        table.push(0);
        table.extend_from_slice(values);
        ValueFunction { values: table }
    }

    /// Table built from marginal gains `Δ(1), Δ(2), ...`.
    pub fn from_marginals(marginals: &[i64]) -> Self {
        let mut acc = 0;
        let values: Vec<i64> = marginals
            .iter()
            .map(|d| {
                acc += d;
                acc
            })
            .collect();
        Self::from_values(&values)
    }

    /// `a * w^gamma` tabulated over `1..=support`, with marginals floored to
    /// whole ticks (at least one) and made non-increasing.
    pub fn power(scale: f64, gamma: f64, support: u32) -> Result<Self, DemandError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(DemandError::Invalid(format!("scale must be positive, got {scale}")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(DemandError::Invalid(format!("exponent must lie in (0, 1], got {gamma}")));
        }
        let mut marginals = Vec::with_capacity(support as usize);
        let mut prev = i64::MAX;
        for w in 1..=support {
            let w = w as f64;
            let raw = (scale * (w.powf(gamma) - (w - 1.0).powf(gamma))).floor() as i64;
            let d = raw.max(1).min(prev);
            marginals.push(d);
            prev = d;
        }
        Ok(Self::from_marginals(&marginals))
    }

    pub fn support(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn value(&self, w: u32) -> Result<i64, DemandError> {
        self.values.get(w as usize).copied().ok_or(DemandError::OutOfSupport { w, support: self.support() })
    }

    /// Marginal gain `Δ(w) = v(w) - v(w-1)`.
    pub fn marginal_gain(&self, w: u32) -> Result<i64, DemandError> {
        if w == 0 || w > self.support() {
            return Err(DemandError::OutOfSupport { w, support: self.support() });
        }
        Ok(self.values[w as usize] - self.values[w as usize - 1])
    }

    /// Non-increasing marginal gains.
    pub fn is_concave(&self) -> bool {
        self.values.windows(3).all(|x| x[2] - x[1] <= x[1] - x[0])
    }

    pub fn is_increasing(&self) -> bool {
        self.values.windows(2).all(|x| x[1] > x[0])
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }
}

/// Largest `m` with `Δ(w) >= P` for every `w <= m`.
pub fn marginal_count(v: &ValueFunction, price: Money) -> u32 {
    let p = price.ticks() as i64;
    let mut h = 0;
    while h < v.support() && v.values[h as usize + 1] - v.values[h as usize] >= p {
        h += 1;
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UserDecision {
    pub price: Money,
    /// `U(P) = min(floor(B/P), T)`, further limited by the value support.
    pub max_hours: u32,
    pub marginal_count: u32,
    /// Chosen hours; 0 means no submission.
    pub hours: u32,
}

/// Closed-form hour choice for a user facing `price` with `deadline` hours
/// left before the deadline.
pub fn decide(
    v: &ValueFunction,
    budget: Money,
    deadline: u32,
    min_run: u32,
    price: Money,
) -> Result<UserDecision, DemandError> {
    if price == Money::ZERO {
        return Err(DemandError::ZeroPrice);
    }
    if !v.is_concave() {
        return Err(DemandError::NotConcave);
    }
    let affordable = budget.ticks() / price.ticks();
    let max_hours = affordable.min(deadline as u64).min(v.support() as u64) as u32;
    let h = marginal_count(v, price);
    let hours = if affordable < min_run as u64 || max_hours < min_run.max(1) {
        0
    } else {
        let w = (affordable.min(min_run.max(h) as u64) as u32).min(max_hours);
        let surplus = v.values[w as usize] - price.ticks() as i64 * w as i64;
        if surplus < 0 {
            0
        } else {
            w
        }
    };
    Ok(UserDecision { price, max_hours, marginal_count: h, hours })
}

pub fn choose_hours(job: &JobSpec, price: Money) -> Result<u32, DemandError> {
    decide(&job.value, job.budget, job.deadline, job.min_run, price).map(|d| d.hours)
}

/// Direct argmax of `v(w) - P*w` over `{0} ∪ {w_min..U}`; the largest
/// maximiser wins and a zero surplus still submits.
pub fn exhaustive_hours(v: &ValueFunction, budget: Money, deadline: u32, min_run: u32, price: Money) -> u32 {
    let p = price.ticks() as i64;
    let cap = (budget.ticks() / price.ticks().max(1)).min(deadline as u64).min(v.support() as u64) as u32;
    let mut best: Option<(i64, u32)> = None;
    for w in min_run.max(1)..=cap {
        let s = v.values[w as usize] - p * w as i64;
        if best.is_none_or(|(b, _)| s >= b) {
            best = Some((s, w));
        }
    }
    match best {
        Some((s, w)) if s >= 0 => w,
        _ => 0,
    }
}

/// Number of jobs that submit at `price`.
pub fn aggregate_demand(jobs: &[JobSpec], price: Money) -> Result<u64, DemandError> {
    let mut count = 0;
    for job in jobs {
        if choose_hours(job, price)? > 0 {
            count += 1;
        }
    }
    Ok(count)
}

/// Total hours requested at `price`.
pub fn aggregate_hours(jobs: &[JobSpec], price: Money) -> Result<u64, DemandError> {
    let mut total = 0;
    for job in jobs {
        total += choose_hours(job, price)? as u64;
    }
    Ok(total)
}

/// Staked providers whose reported cost is at most `price`.
pub fn aggregate_supply(providers: &[ProviderRecord], period: u32, price: Money) -> u64 {
    providers.iter().filter(|p| p.is_staked_at(period) && p.reported_cost <= price).count() as u64
}
