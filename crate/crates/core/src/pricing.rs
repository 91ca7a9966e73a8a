//! Load, pricing functions, the equilibrium-quote fixed point, the
//! admissibility check and the floor-price update.
//!
//! Prices are solved on the tick grid. Pricing functions and synthetic
//! curves are evaluated in `f64` ticks, but only tick-aligned [`Money`]
//! leaves this module.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Money;

#[derive(Debug, Error, PartialEq)]
pub enum PricingError {
    #[error("demand {demand} with no floor supply")]
    NoFloorSupply { demand: u64 },
    #[error("{curve} curve is not monotone at {at}")]
    MonotonicityViolation { curve: &'static str, at: Money },
    #[error("invalid pricing function: {0}")]
    InvalidFunction(String),
    #[error("empty price bracket [{lo}, {hi}]")]
    EmptyBracket { lo: Money, hi: Money },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PricingKind {
    /// `P_f * (1 + slope * (α - 1))`, capped.
    LinearCapped { slope: f64 },
    /// `cap - (cap - P_f) * α^-gamma`.
    ConcavePower { gamma: f64 },
    /// Piecewise-linear multiplier of `P_f` through `(α, multiplier)` knots,
    /// flat after the last knot.
    Tabulated { points: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PricingFunction {
    pub kind: PricingKind,
    pub floor: Money,
    pub cap: Money,
}

impl PricingFunction {
    pub fn new(kind: PricingKind, floor: Money, cap: Money) -> Result<Self, PricingError> {
        if cap < floor {
            return Err(PricingError::InvalidFunction(format!("cap {cap} below floor {floor}")));
        }
        match &kind {
            PricingKind::LinearCapped { slope } if !(*slope > 0.0 && slope.is_finite()) => {
                return Err(PricingError::InvalidFunction(format!("slope must be positive, got {slope}")));
            }
            PricingKind::ConcavePower { gamma } if !(*gamma > 0.0 && gamma.is_finite()) => {
                return Err(PricingError::InvalidFunction(format!("gamma must be positive, got {gamma}")));
            }
            PricingKind::Tabulated { points } => {
                if points.first() != Some(&(1.0, 1.0)) {
                    return Err(PricingError::InvalidFunction("table must start at (1, 1)".into()));
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
                    return Err(PricingError::InvalidFunction("table must be strictly increasing".into()));
                }
            }
            _ => {}
        }
        Ok(PricingFunction { kind, floor, cap })
    }

    pub fn linear(slope: f64, floor: Money, cap: Money) -> Result<Self, PricingError> {
        Self::new(PricingKind::LinearCapped { slope }, floor, cap)
    }

    /// `f(α)` in ticks, for `α >= 1`.
    pub fn eval(&self, alpha: f64) -> f64 {
        let pf = self.floor.ticks() as f64;
        let cap = self.cap.ticks() as f64;
        let a = alpha.max(1.0);
        let raw = match &self.kind {
            PricingKind::LinearCapped { slope } => pf * (1.0 + slope * (a - 1.0)),
            PricingKind::ConcavePower { gamma } => cap - (cap - pf) * a.powf(-gamma),
            PricingKind::Tabulated { points } => {
                let last = points[points.len() - 1];
                let m = if a >= last.0 {
                    last.1
                } else {
                    let i = points.partition_point(|p| p.0 <= a);
                    let (a0, m0) = points[i - 1];
                    let (a1, m1) = points[i];
                    m0 + (m1 - m0) * (a - a0) / (a1 - a0)
                };
                pf * m
            }
        };
        raw.min(cap)
    }

    /// Right derivative `f'(1+)` in ticks per unit load.
    pub fn slope_at_one(&self) -> f64 {
        let pf = self.floor.ticks() as f64;
        let cap = self.cap.ticks() as f64;
        if cap <= pf {
            return 0.0;
        }
        match &self.kind {
            PricingKind::LinearCapped { slope } => pf * slope,
            PricingKind::ConcavePower { gamma } => gamma * (cap - pf),
            PricingKind::Tabulated { points } => match points.get(1) {
                Some(&(a1, m1)) => pf * (m1 - 1.0) / (a1 - 1.0),
                None => 0.0,
            },
        }
    }
}

/// Load `α`: 1 when demand fits within floor supply, `D / S_f` otherwise.
pub fn compute_load(demand: u64, floor_supply: u64) -> Result<Ratio<u64>, PricingError> {
    if demand <= floor_supply {
        Ok(Ratio::from_integer(1))
    } else if floor_supply == 0 {
        Err(PricingError::NoFloorSupply { demand })
    } else {
        Ok(Ratio::new(demand, floor_supply))
    }
}

/// A demand or supply curve over prices, in (possibly fractional) counts.
pub trait Curve {
    fn at(&self, price: Money) -> f64;
}

impl<F: Fn(Money) -> f64> Curve for F {
    fn at(&self, price: Money) -> f64 {
        self(price)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quote {
    pub price: Money,
    /// No sign change of Φ in the bracket; the boundary was posted.
    pub clamped: bool,
}

const EPS: f64 = 1e-9;

fn load_f64(demand: f64, floor_supply: u64) -> f64 {
    if demand <= floor_supply as f64 {
        1.0
    } else {
        demand / floor_supply as f64
    }
}

/// Equilibrium quote on `[P_f, cap]`: the smallest tick with
/// `P - f(D(P)/S_f) >= 0`.
pub fn solve_equilibrium_quote(
    f: &PricingFunction,
    demand: &dyn Curve,
    floor_supply: u64,
) -> Result<Quote, PricingError> {
    solve_in_bracket(f, demand, floor_supply, f.floor, f.cap)
}

/// As [`solve_equilibrium_quote`] over an explicit bracket.
pub fn solve_in_bracket(
    f: &PricingFunction,
    demand: &dyn Curve,
    floor_supply: u64,
    lo: Money,
    hi: Money,
) -> Result<Quote, PricingError> {
    if hi < lo {
        return Err(PricingError::EmptyBracket { lo, hi });
    }
    let grid: Vec<f64> = (lo.ticks()..=hi.ticks()).map(|p| demand.at(Money::from_ticks(p))).collect();
    for (i, w) in grid.windows(2).enumerate() {
        if w[1] > w[0] + EPS || w[1].is_nan() || w[1] < 0.0 {
            return Err(PricingError::MonotonicityViolation {
                curve: "demand",
                at: Money::from_ticks(lo.ticks() + i as u64 + 1),
            });
        }
    }
    if floor_supply == 0 {
        if grid[0] <= 0.0 {
            return Ok(Quote { price: lo, clamped: false });
        }
        return Err(PricingError::NoFloorSupply { demand: grid[0].ceil() as u64 });
    }
    let phi = |i: u64| {
        let p = (lo.ticks() + i) as f64;
        p - f.eval(load_f64(grid[i as usize], floor_supply))
    };
    let nonneg = |i: u64| phi(i) >= -EPS * (lo.ticks() + i).max(1) as f64;
    let top = hi.ticks() - lo.ticks();
    if nonneg(0) {
        return Ok(Quote { price: lo, clamped: false });
    }
    if !nonneg(top) {
        return Ok(Quote { price: hi, clamped: true });
    }
    let (mut a, mut b) = (0, top);
    while b - a > 1 {
        let mid = a + (b - a) / 2;
        if nonneg(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Quote { price: Money::from_ticks(lo.ticks() + b), clamped: false })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Admissibility {
    /// `S(P*) >= D(P*)`.
    pub admissible: bool,
    /// Lowest tick in `[P_f, cap]` with `S >= D`; `None` if there is none.
    pub threshold: Option<Money>,
}

pub fn check_admissibility(
    supply: &dyn Curve,
    demand: &dyn Curve,
    quote: Money,
    floor: Money,
    cap: Money,
) -> Admissibility {
    let covers = |p: Money| supply.at(p) + EPS >= demand.at(p);
    let threshold = (floor.ticks()..=cap.ticks()).map(Money::from_ticks).find(|&p| covers(p));
    Admissibility { admissible: covers(quote), threshold }
}

/// Mean of the last `window` per-period marginal costs, padded with the
/// oldest entry and rounded half down to a tick.
pub fn update_floor(history: &[Money], window: usize) -> Money {
    assert!(window >= 1 && !history.is_empty(), "floor update needs a window and history");
    let recent = &history[history.len().saturating_sub(window)..];
    let pad = window - recent.len();
    let sum: u64 = recent.iter().map(|m| m.ticks()).sum::<u64>() + pad as u64 * recent[0].ticks();
    let t = window as u64;
    let (q, r) = (sum / t, sum % t);
    Money::from_ticks(if 2 * r > t { q + 1 } else { q })
}
