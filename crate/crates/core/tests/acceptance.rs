//! Release gate. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails. Every check compares the library against an
//! oracle written here, independently of the production code paths.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stakemarket::adversary::{
    anti_sorted_instances, build_tight_pair_instance, compare_reports, compare_two_provider, gap1_window,
    peel_and_load, peel_brute_force, stake_early_identity, AdversaryRules, CompetitiveScenario,
};
use stakemarket::bench::complexity_bench;
use stakemarket::demand::{decide, ValueFunction};
use stakemarket::matching::{deficiency, run_sequence, Algorithm, GsmFallback, PoolEntry};
use stakemarket::payout::{hourly_payment, total_return, Engagement};
use stakemarket::pricing::{compute_load, solve_equilibrium_quote, PricingFunction, PricingKind};
use stakemarket::race::{best_response_scan, random_config, run_race, RaceConfig};
use stakemarket::Money;

const SEED: u64 = 20_240_611;
const GSM: Algorithm = Algorithm::Gsm(GsmFallback::Reject);

// Pinned tolerances.
const PHI_TOL: f64 = 1e-9;
const CURVE_TOL: f64 = 1e-9;
const MIN_LOG_CORRELATION: f64 = 0.99;
const MAX_GCM_SPREAD: f64 = 2.0;
const CONFIDENCE: f64 = 0.95;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn rng(tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ (tag << 48) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn ticks(t: u64) -> Money {
    Money::from_ticks(t)
}

// ---------------------------------------------------------------- oracles

/// Maximum number of jobs that can be given distinct providers with
/// `tau >= w`, by augmenting paths.
fn max_feasible(taus: &[u32], jobs: &[u32]) -> usize {
    fn augment(j: usize, taus: &[u32], jobs: &[u32], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for s in 0..taus.len() {
            if taus[s] >= jobs[j] && !seen[s] {
                seen[s] = true;
                if owner[s].is_none_or(|k| augment(k, taus, jobs, seen, owner)) {
                    owner[s] = Some(j);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; taus.len()];
    (0..jobs.len()).filter(|&j| augment(j, taus, jobs, &mut vec![false; taus.len()], &mut owner)).count()
}

/// `max_k (#jobs with w >= k - #providers with tau >= k)+`.
fn deficiency_oracle(taus: &[u32], jobs: &[u32]) -> usize {
    let top = jobs.iter().copied().max().unwrap_or(0);
    (1..=top)
        .map(|k| {
            let need = jobs.iter().filter(|&&w| w >= k).count();
            let have = taus.iter().filter(|&&t| t >= k).count();
            need.saturating_sub(have)
        })
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    Cheapest,
    CheapestFeasible { reject: bool },
    ShortestFeasible { reject: bool },
}

/// Plain-vector replay of the three online rules. Returns the matched
/// providers in arrival order with their feasibility; `None` marks a
/// rejection or an exhausted pool.
fn replay(rule: Rule, pool: &[PoolEntry], jobs: &[u32]) -> Vec<Option<(PoolEntry, bool)>> {
    let mut left = pool.to_vec();
    let mut out = Vec::new();
    for &w in jobs {
        if left.is_empty() {
            out.push(None);
            continue;
        }
        let feasible = left.iter().filter(|p| p.tau >= w);
        let pick = match rule {
            Rule::Cheapest => left.iter().min_by_key(|p| (p.cost, p.tau, p.id)).copied(),
            Rule::CheapestFeasible { reject } => {
                feasible.min_by_key(|p| (p.cost, p.tau, p.id)).copied().or_else(|| {
                    let top = left.iter().map(|p| p.tau).max()?;
                    (!reject).then(|| *left.iter().filter(|p| p.tau == top).min_by_key(|p| (p.cost, p.id)).unwrap())
                })
            }
            Rule::ShortestFeasible { reject } => {
                feasible.min_by_key(|p| (p.tau, p.cost, p.id)).copied().or_else(|| {
                    let top = left.iter().map(|p| p.tau).max()?;
                    (!reject).then(|| *left.iter().filter(|p| p.tau == top).min_by_key(|p| (p.cost, p.id)).unwrap())
                })
            }
        };
        match pick {
            Some(p) => {
                left.retain(|q| q.id != p.id);
                out.push(Some((p, p.tau >= w)));
            }
            None => out.push(None),
        }
    }
    out
}

fn feasible_count(r: &[Option<(PoolEntry, bool)>]) -> usize {
    r.iter().filter(|m| matches!(m, Some((_, true)))).count()
}

fn matched_cost(r: &[Option<(PoolEntry, bool)>]) -> u64 {
    r.iter().flatten().map(|(p, _)| p.cost.ticks()).sum()
}

fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Base rate plus an equal share of the premiums of every provider working
/// at `hour` whose job started no earlier than `s`'s.
fn payment_oracle(ledger: &[Engagement], s: u32, hour: u32) -> Ratio<i64> {
    let working = |e: &&Engagement| e.start <= hour && hour < e.start + e.hours;
    let me = ledger.iter().filter(working).find(|e| e.provider == s).expect("working");
    let members: Vec<&Engagement> = ledger.iter().filter(working).filter(|e| e.start >= me.start).collect();
    let pool: i64 = members.iter().map(|e| e.price.diff(e.reported_cost)).sum();
    Ratio::from_integer(me.reported_cost.ticks() as i64) + Ratio::new(pool, members.len() as i64)
}

fn percentile_ci(samples: &[f64], resamples: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = samples.len();
    let mut means: Vec<f64> =
        (0..resamples).map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64).collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tail = (1.0 - CONFIDENCE) / 2.0;
    let at = |q: f64| means[((q * resamples as f64) as usize).min(resamples - 1)];
    (at(tail), at(1.0 - tail))
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

// ------------------------------------------------------------- criteria

fn gsm_optimality() -> Verdict {
    let mut bad = 0;
    let mut first = None;
    for i in 0..1000 {
        let mut r = rng(1, i);
        let m = r.random_range(1..=8);
        let n = r.random_range(1..=8);
        let pool: Vec<PoolEntry> =
            (0..m).map(|id| PoolEntry::new(id, r.random_range(1..=6), ticks(r.random_range(5..=20)))).collect();
        let jobs: Vec<u32> = (0..n).map(|_| r.random_range(1..=6)).collect();
        let taus: Vec<u32> = pool.iter().map(|p| p.tau).collect();
        let got = run_sequence(GSM, &pool, &jobs).feasible();
        let delta = deficiency_oracle(&taus, &jobs);
        let lib_delta = deficiency(&taus, &jobs).delta;
        let best = max_feasible(&taus, &jobs);
        if got != jobs.len() - delta || got != best || lib_delta != delta {
            bad += 1;
            first.get_or_insert(format!(
                "taus {taus:?} jobs {jobs:?}: gsm {got}, n-delta {}, oracle {best}",
                jobs.len() - delta
            ));
        }
    }
    verdict(
        bad == 0,
        format!("1000 instances, {bad} mismatches{}", first.map_or(String::new(), |f| format!("; first {f}"))),
    )
}

fn cfm_dregret() -> Verdict {
    let (mut orders, mut violations, mut fallback_violations, mut replay_mismatch) = (0, 0, 0, 0);
    for m in 1..=6u32 {
        for n in 1..=6u32 {
            for k in 0..10 {
                let mut r = rng(2, (m * 10 + n) as u64 * 100 + k);
                let pool: Vec<PoolEntry> = (0..m)
                    .map(|id| PoolEntry::new(id, r.random_range(1..=5), ticks(10 + r.random_range(0..=3))))
                    .collect();
                let jobs: Vec<u32> = (0..n).map(|_| r.random_range(1..=5)).collect();
                let taus: Vec<u32> = pool.iter().map(|p| p.tau).collect();
                let best = max_feasible(&taus, &jobs);
                for order in permutations(&jobs) {
                    orders += 1;
                    let strict = run_sequence(Algorithm::CfmReject, &pool, &order).feasible();
                    let fallback = run_sequence(Algorithm::Cfm, &pool, &order).feasible();
                    if strict != feasible_count(&replay(Rule::CheapestFeasible { reject: true }, &pool, &order))
                        || fallback != feasible_count(&replay(Rule::CheapestFeasible { reject: false }, &pool, &order))
                    {
                        replay_mismatch += 1;
                    }
                    violations += usize::from(best - strict > n as usize / 2);
                    fallback_violations += usize::from(best - fallback > n as usize / 2);
                }
            }
        }
    }
    let mut tight = Vec::new();
    for k in 1..=3u32 {
        let inst = build_tight_pair_instance(k);
        let taus: Vec<u32> = inst.pool.iter().map(|p| p.tau).collect();
        let anti_sorted = inst.pool.iter().all(|a| inst.pool.iter().all(|b| a.tau <= b.tau || a.cost <= b.cost));
        let best = max_feasible(&taus, &inst.jobs);
        let strict = best - run_sequence(Algorithm::CfmReject, &inst.pool, &inst.jobs).feasible();
        let fallback = best - run_sequence(Algorithm::Cfm, &inst.pool, &inst.jobs).feasible();
        tight.push(anti_sorted && inst.pool.len() == 2 * k as usize && strict == k as usize && fallback == k as usize);
    }
    verdict(
        violations == 0 && replay_mismatch == 0 && tight.iter().all(|&t| t),
        format!(
            "{orders} arrival orders over m, n <= 6: {violations} violations of floor(n/2) for rejecting CFM \
             ({fallback_violations} for the longest-fallback variant, reported); replay mismatches {replay_mismatch}; \
             tight pairs k=1..3 at bound {tight:?}"
        ),
    )
}

fn supply_bound(m: u64, n: u64, price: u64, floor: u64) -> u64 {
    let gap = price - floor;
    if gap == 0 || n >= m {
        0
    } else if n <= m / 2 {
        gap * n
    } else {
        gap * (m - n)
    }
}

fn sregret() -> Verdict {
    let (mut violations, mut replay_mismatch) = (0, 0);
    for i in 0..1000 {
        let mut r = rng(3, i);
        let floor = r.random_range(5..=20u64);
        let price = floor + r.random_range(0..=10);
        let m = r.random_range(1..=8u32);
        let n = r.random_range(1..=8u32);
        let pool: Vec<PoolEntry> =
            (0..m).map(|id| PoolEntry::new(id, r.random_range(1..=6), ticks(r.random_range(floor..=price)))).collect();
        let jobs: Vec<u32> = (0..n).map(|_| r.random_range(1..=6)).collect();
        let cfm = matched_cost(&replay(Rule::CheapestFeasible { reject: false }, &pool, &jobs));
        let gcm = matched_cost(&replay(Rule::Cheapest, &pool, &jobs));
        if cfm != run_sequence(Algorithm::Cfm, &pool, &jobs).cost().ticks()
            || gcm != run_sequence(Algorithm::Gcm, &pool, &jobs).cost().ticks()
        {
            replay_mismatch += 1;
        }
        if cfm as i64 - gcm as i64 > supply_bound(m as u64, n as u64, price, floor) as i64 {
            violations += 1;
        }
    }
    verdict(
        violations == 0 && replay_mismatch == 0,
        format!("1000 instances, {violations} bound violations, {replay_mismatch} replay mismatches"),
    )
}

fn pricing_eval(kind: &PricingKind, floor: f64, cap: f64, alpha: f64) -> f64 {
    let a = alpha.max(1.0);
    let raw = match kind {
        PricingKind::LinearCapped { slope } => floor + floor * slope * (a - 1.0),
        PricingKind::ConcavePower { gamma } => cap - (cap - floor) / a.powf(*gamma),
        PricingKind::Tabulated { points } => {
            let mut m = points.last().unwrap().1;
            for w in points.windows(2) {
                if a < w[1].0 {
                    m = w[0].1 + (w[1].1 - w[0].1) * (a - w[0].0) / (w[1].0 - w[0].0);
                    break;
                }
            }
            floor * m
        }
    };
    raw.min(cap)
}

fn fixed_point() -> Verdict {
    let (mut mismatch, mut non_monotone) = (0, 0);
    for i in 0..200 {
        let mut r = rng(4, i);
        let floor = r.random_range(5..=30u64);
        let cap = floor + r.random_range(5..=60);
        let kind = match i % 3 {
            0 => PricingKind::LinearCapped { slope: r.random_range(0.2..3.0) },
            1 => PricingKind::ConcavePower { gamma: r.random_range(0.2..2.0) },
            _ => {
                let mut points = vec![(1.0, 1.0)];
                for _ in 0..r.random_range(1..=4) {
                    let (a, m) = *points.last().unwrap();
                    points.push((a + r.random_range(0.2..1.5), m + r.random_range(0.1..1.0)));
                }
                PricingKind::Tabulated { points }
            }
        };
        let s_f = r.random_range(1..=20u64);
        let mut demand = BTreeMap::new();
        let mut d = r.random_range(0..=80u64);
        for p in floor..=cap {
            demand.insert(p, d);
            d = d.saturating_sub(r.random_range(0..=3));
        }
        let f = PricingFunction::new(kind.clone(), ticks(floor), ticks(cap)).unwrap();
        let curve = |p: Money| demand[&p.ticks()] as f64;
        let quote = solve_equilibrium_quote(&f, &curve, s_f).unwrap().price.ticks();
        let alpha = |p: u64| {
            let d = demand[&p];
            if d <= s_f {
                1.0
            } else {
                d as f64 / s_f as f64
            }
        };
        let scan = (floor..=cap)
            .find(|&p| p as f64 - pricing_eval(&kind, floor as f64, cap as f64, alpha(p)) >= -PHI_TOL * p as f64)
            .unwrap_or(cap);
        if quote != scan {
            mismatch += 1;
        }
        let mut prev = f64::INFINITY;
        for p in floor..=cap {
            let a = alpha(p);
            let lib = compute_load(demand[&p], s_f).unwrap();
            let lib = *lib.numer() as f64 / *lib.denom() as f64;
            if a > prev || (lib - a).abs() > 1e-12 {
                non_monotone += 1;
                break;
            }
            prev = a;
        }
    }
    verdict(
        mismatch == 0 && non_monotone == 0,
        format!(
            "200 curve pairs, {mismatch} solver/scan mismatches, {non_monotone} grids with rising or disagreeing load"
        ),
    )
}

fn admissibility() -> Verdict {
    let (mut admissible, mut premise_bad) = (0, 0);
    let mut first_bad = None;
    for i in 0..100 {
        let mut r = rng(5, i);
        let floor = r.random_range(10..=40u64);
        let p_adm = floor + r.random_range(1..=20);
        let s_f = r.random_range(1..=10u64) as f64;
        let a: f64 = r.random_range(0.0..=1.0);
        let c: f64 = r.random_range(1.0..=3.0);
        let supply = |p: u64| s_f + a * (p as f64 - floor as f64);
        let demand = |p: u64| (supply(p) + p_adm as f64 - p as f64).max(0.0);
        // (S1) with unit slack on [P_f, P_adm], and P_adm is the first covering tick.
        let s1 = (floor..=p_adm).all(|p| demand(p) - supply(p) + CURVE_TOL >= (p_adm - p) as f64)
            && (floor..p_adm).all(|p| supply(p) < demand(p));
        let f = PricingFunction::linear(c * s_f / floor as f64, ticks(floor), ticks(floor + 400)).unwrap();
        let right_slope = (f.eval(1.0 + 1e-6) - f.eval(1.0)) / 1e-6;
        let f1 = right_slope + 1e-3 >= s_f;
        if !(s1 && f1) {
            premise_bad += 1;
            continue;
        }
        let curve = |p: Money| demand(p.ticks());
        let q = solve_equilibrium_quote(&f, &curve, s_f as u64).unwrap().price.ticks();
        if supply(q) + CURVE_TOL >= demand(q) {
            admissible += 1;
        } else {
            first_bad.get_or_insert(format!("P_f {floor} P_adm {p_adm} S_f {s_f} a {a:.3} c {c:.3} -> P* {q}"));
        }
    }
    verdict(
        admissible == 100 && premise_bad == 0,
        format!(
            "{admissible}/100 constructions admissible at the solved quote ({premise_bad} failed the premises){}",
            first_bad.map_or(String::new(), |f| format!("; first miss {f}"))
        ),
    )
}

fn pool_sharing() -> Verdict {
    let mut failures = Vec::new();
    for i in 0..500 {
        let mut r = rng(6, i);
        let price = ticks(r.random_range(1..=50));
        let n = r.random_range(1..=8u32);
        let ledger: Vec<Engagement> = (0..n)
            .map(|id| Engagement {
                provider: id,
                job: id,
                reported_cost: ticks(r.random_range(0..=price.ticks())),
                price,
                start: 3,
                hours: 1,
            })
            .collect();
        let total: Ratio<i64> = (0..n).map(|s| hourly_payment(&ledger, s, 3).unwrap()).sum();
        if total != Ratio::from_integer(price.ticks() as i64 * n as i64) {
            failures.push(format!("cohort {i} unbalanced"));
        }
    }
    for i in 0..500 {
        let mut r = rng(66, i);
        let ledger: Vec<Engagement> = (0..r.random_range(1..=7u32))
            .map(|id| {
                let price = ticks(r.random_range(1..=50));
                Engagement {
                    provider: id,
                    job: id,
                    reported_cost: ticks(r.random_range(0..=price.ticks())),
                    price,
                    start: r.random_range(0..5),
                    hours: r.random_range(1..=5),
                }
            })
            .collect();
        for e in &ledger {
            for h in e.start..e.start + e.hours {
                let pay = hourly_payment(&ledger, e.provider, h).unwrap();
                if pay != payment_oracle(&ledger, e.provider, h) {
                    failures.push(format!("ledger {i} provider {} hour {h}: oracle disagrees", e.provider));
                }
                if pay < Ratio::from_integer(e.reported_cost.ticks() as i64) {
                    failures.push(format!("ledger {i} provider {} hour {h}: paid below cost", e.provider));
                }
            }
        }
    }
    let e = |provider, cost, start, hours| Engagement {
        provider,
        job: provider,
        reported_cost: ticks(cost),
        price: ticks(10),
        start,
        hours,
    };
    let example = [e(0, 5, 0, 2), e(1, 4, 1, 3), e(2, 6, 2, 3)];
    let pair = (hourly_payment(&example, 1, 2).unwrap(), hourly_payment(&example, 2, 2).unwrap());
    if pair != (Ratio::from_integer(9), Ratio::from_integer(10)) {
        failures.push(format!("staggered example settled to {pair:?}"));
    }
    verdict(
        failures.is_empty(),
        format!(
            "500 cohorts balanced exactly, 500 staggered ledgers match the anchored-pool oracle and pay at least cost, \
             staggered example ({}, {}); {} failures",
            pair.0, pair.1, failures.len()
        ),
    )
}

fn comparative_statics() -> Verdict {
    let (mut ineq_bad, mut argmax_bad) = (0, 0);
    for i in 0..500 {
        let mut r = rng(7, i);
        let support = r.random_range(1..=12u32);
        let v = ValueFunction::power(r.random_range(5.0..80.0), r.random_range(0.3..=1.0), support).unwrap();
        let values: Vec<i64> = (0..=support).map(|w| v.value(w).unwrap()).collect();
        if values.windows(3).any(|w| w[2] - w[1] > w[1] - w[0]) {
            ineq_bad += 1;
            continue;
        }
        let budget = r.random_range(1..=300u64);
        let deadline = r.random_range(1..=12u32);
        let min_run = r.random_range(1..=3u32);
        let hi = r.random_range(2..=60u64);
        let lo = r.random_range(1..hi);
        let upper = |p: u64| (budget / p).min(deadline as u64).min(support as u64) as u32;
        let h = |p: u64| {
            (1..=support).take_while(|&w| values[w as usize] - values[w as usize - 1] >= p as i64).count() as u32
        };
        let argmax = |p: u64| {
            let mut best: Option<(i64, u32)> = None;
            for w in min_run..=upper(p) {
                let s = values[w as usize] - p as i64 * w as i64;
                if best.is_none_or(|(b, _)| s >= b) {
                    best = Some((s, w));
                }
            }
            best.filter(|&(s, _)| s >= 0).map_or(0, |(_, w)| w)
        };
        let a = decide(&v, ticks(budget), deadline, min_run, ticks(lo)).unwrap();
        let b = decide(&v, ticks(budget), deadline, min_run, ticks(hi)).unwrap();
        if a.hours != argmax(lo) || b.hours != argmax(hi) || a.max_hours != upper(lo) || a.marginal_count != h(lo) {
            argmax_bad += 1;
        }
        let (wl, wh) = (argmax(lo), argmax(hi));
        if !(upper(lo) >= upper(hi) && h(lo) >= h(hi) && wl >= wh && (wl > 0) >= (wh > 0)) {
            ineq_bad += 1;
        }
    }
    verdict(
        ineq_bad == 0 && argmax_bad == 0,
        format!("500 concave users, {ineq_bad} inequality failures, {argmax_bad} closed-form/argmax disagreements"),
    )
}

fn gap1_times(short: u32, long: u32) -> Vec<u32> {
    let rem = |t: u32, s: u32| s - t % s;
    let l = short * long / gcd(short, long);
    (0..l).filter(|&t| rem(t, long) == rem(t, short) + 1).collect()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn cyclic_block(times: &[u32], period: u32) -> bool {
    let breaks = (0..times.len()).filter(|&i| (times[i] + 1) % period != times[(i + 1) % times.len()]).count();
    breaks == 1
}

fn multiperiod() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for (s, l) in [(2, 3), (2, 4), (3, 4), (3, 5), (4, 6)] {
        let rep = compare_two_provider(s, l, AdversaryRules::default()).unwrap();
        let coprime = gcd(s, l) == 1;
        let excess = rep.excess();
        let bound_ok = if coprime { excess <= 1 } else { excess == 0 };
        ok &= bound_ok && rep.coprime == coprime && rep.cfm.max_per_period <= 1;
        lines.push(format!("({s},{l}) cfm {} gsm {} excess {excess}", rep.cfm.max_infeasible, rep.gsm.max_infeasible));
    }
    let mut windows = 0;
    for s in 2..60u32 {
        for l in s + 1..=60 {
            if s * l / gcd(s, l) > 60 {
                continue;
            }
            windows += 1;
            let times = gap1_times(s, l);
            let structure = if gcd(s, l) == 1 {
                times.len() == s as usize && cyclic_block(&times, s * l)
            } else {
                times.is_empty()
            };
            ok &= structure && gap1_window(s, l).times == times;
        }
    }
    verdict(ok, format!("{}; gap-1 windows checked on {windows} pairs with lcm <= 60", lines.join(", ")))
}

fn peel_oracle(taus: &[u32], rule: Rule) -> usize {
    let top = *taus.iter().max().unwrap() as u64;
    let pool: Vec<PoolEntry> =
        taus.iter().enumerate().map(|(i, &t)| PoolEntry::new(i as u32, t, ticks(top + 1 - t as u64))).collect();
    fn go(pool: &[PoolEntry], rule: Rule, used: u32, budget: u32, memo: &mut HashMap<(u32, u32), usize>) -> usize {
        let left: Vec<PoolEntry> = pool.iter().filter(|p| used & (1 << p.id) == 0).copied().collect();
        if left.is_empty() {
            return 0;
        }
        if let Some(&v) = memo.get(&(used, budget)) {
            return v;
        }
        let reserve = left.len() as u32 - 1;
        let mut best = 0;
        for w in 1..=budget.saturating_sub(reserve) {
            if let Some((p, feasible)) = replay(rule, &left, &[w])[0] {
                best = best.max(usize::from(!feasible) + go(pool, rule, used | 1 << p.id, budget - w, memo));
            }
        }
        memo.insert((used, budget), best);
        best
    }
    go(&pool, rule, 0, taus.iter().sum(), &mut HashMap::new())
}

fn anti_sorted_lists(max_m: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<u32>> = (lo..=hi).map(|t| vec![t]).collect();
    while let Some(list) = stack.pop() {
        if list.len() < max_m {
            for t in lo..=*list.last().unwrap() {
                let mut next = list.clone();
                next.push(t);
                stack.push(next);
            }
        }
        out.push(list);
    }
    out.sort();
    out
}

fn peel() -> Verdict {
    let lists = anti_sorted_lists(5, 2, 6);
    let mut lib_lists = anti_sorted_instances(5, 6);
    lib_lists.sort();
    let (mut cfm_bad, mut gsm_disagree, mut over, mut lib_bad) = (0, 0, 0, 0);
    for taus in &lists {
        let m = taus.len();
        let rep = peel_and_load(taus).unwrap();
        let cfm = peel_oracle(taus, Rule::CheapestFeasible { reject: false });
        let gsm = peel_oracle(taus, Rule::ShortestFeasible { reject: false });
        if rep.u_max_cfm() != Some(cfm) {
            cfm_bad += 1;
        }
        if rep.u_max_gsm() != Some(gsm) {
            gsm_disagree += 1;
        }
        if cfm + 1 > m || gsm + 1 > m {
            over += 1;
        }
        if peel_brute_force(taus, Algorithm::Cfm) != Ok(cfm)
            || peel_brute_force(taus, Algorithm::Gsm(GsmFallback::Longest)) != Ok(gsm)
        {
            lib_bad += 1;
        }
    }
    verdict(
        cfm_bad == 0 && over == 0 && lib_bad == 0 && lists == lib_lists,
        format!(
            "{} anti-sorted lists: cfm formula disagreements {cfm_bad}, gsm formula disagreements {gsm_disagree} (reported), \
             optimum above m-1 {over}, brute-force cross-check mismatches {lib_bad}",
            lists.len()
        ),
    )
}

fn complexity() -> Verdict {
    let rep = complexity_bench(4, 16, 3, SEED);
    let series = |algo| -> Vec<(f64, f64)> {
        rep.rows.iter().filter(|r| r.algo == algo).map(|r| ((r.n as f64).log2(), r.ops_per_job)).collect()
    };
    let cfm = series(Algorithm::Cfm);
    let (xs, ys): (Vec<f64>, Vec<f64>) = cfm.iter().copied().unzip();
    let corr = pearson(&xs, &ys);
    let gcm: Vec<f64> = series(Algorithm::Gcm).iter().map(|p| p.1).collect();
    let spread = gcm.iter().copied().fold(f64::MIN, f64::max) / gcm.iter().copied().fold(f64::MAX, f64::min);
    let sizes = cfm.len() == 13 && gcm.len() == 13;
    verdict(
        sizes && corr >= MIN_LOG_CORRELATION && spread <= MAX_GCM_SPREAD,
        format!("n = 2^4..2^16: cfm ops vs log2 n correlation {corr:.4}, gcm max/min ops per job {spread:.3}"),
    )
}

fn undominated(cfg: &RaceConfig, index: usize, grid: &[u32]) -> Vec<u32> {
    let me = cfg.racers[index];
    let top = *grid.iter().max().unwrap();
    let rivals: Vec<u32> = cfg.racers.iter().filter(|r| r.id != me.id).map(|r| r.id).collect();
    let min_rival = rivals.iter().copied().min();
    let mut columns: Vec<Option<(u32, u32)>> = Vec::new();
    if rivals.is_empty() {
        columns.push(None);
    }
    for &q in grid {
        for &rid in &rivals {
            if q < top || Some(rid) == min_rival {
                columns.push(Some((q, rid)));
            }
        }
    }
    let payoff = |q: u32, col: Option<(u32, u32)>| -> i64 {
        let wins = col.is_none_or(|(rq, rid)| (q, me.id) < (rq, rid));
        if !wins {
            return 0;
        }
        let paid = cfg.price.ticks() as i64 * q as i64;
        if q.abs_diff(me.true_time) <= cfg.epsilon {
            paid
        } else {
            paid - cfg.stake.ticks() as i64
        }
    };
    let rows: Vec<Vec<i64>> = grid.iter().map(|&q| columns.iter().map(|&c| payoff(q, c)).collect()).collect();
    let dominated = |i: usize| {
        (0..grid.len()).any(|j| {
            rows[j].iter().zip(&rows[i]).all(|(a, b)| a >= b) && rows[j].iter().zip(&rows[i]).any(|(a, b)| a > b)
        })
    };
    (0..grid.len()).filter(|&i| !dominated(i)).map(|i| grid[i]).collect()
}

fn race() -> Verdict {
    let (mut window_bad, mut scan_bad, mut outcome_bad) = (0, 0, 0);
    for epsilon in 0..=2 {
        for i in 0..200 {
            let (mut cfg, grid) = random_config(SEED, i, epsilon);
            let mut lowest = Vec::new();
            for k in 0..cfg.racers.len() {
                let mine = undominated(&cfg, k, &grid);
                let t = cfg.racers[k].true_time;
                if mine.is_empty() || mine.iter().any(|&q| q.abs_diff(t) > epsilon) {
                    window_bad += 1;
                }
                if best_response_scan(&cfg, k, &grid).unwrap().undominated != mine {
                    scan_bad += 1;
                }
                lowest.push(mine.first().copied().unwrap_or(t));
            }
            for (r, q) in cfg.racers.iter_mut().zip(lowest) {
                r.quote = q;
            }
            let winner = cfg.racers.iter().min_by_key(|r| (r.quote, r.id)).unwrap();
            let fastest = cfg.racers.iter().map(|r| r.true_time).min().unwrap();
            let lib = run_race(&cfg).unwrap();
            if winner.true_time != fastest || winner.quote.abs_diff(fastest) > epsilon || lib.winner != winner.id {
                outcome_bad += 1;
            }
        }
    }
    verdict(
        window_bad == 0 && scan_bad == 0 && outcome_bad == 0,
        format!(
            "600 configs (eps 0..2): undominated quotes outside the window {window_bad}, scan/oracle disagreements {scan_bad}, \
             lowest-undominated races not won by the fastest within eps {outcome_bad}"
        ),
    )
}

fn competitive_utility(r: &mut ChaCha8Rng, report: u64) -> f64 {
    let (c, price, rivals, spread) = (50u64, 60u64, 12, 5u64);
    let mut bids: Vec<(u64, u32)> = vec![(report, 0)];
    bids.extend((1..=rivals).map(|id| (r.random_range(c - spread..=c + spread), id)));
    let jobs = r.random_range(1..=12usize);
    bids.retain(|&(b, _)| b <= price);
    bids.sort();
    let matched = &bids[..jobs.min(bids.len())];
    if !matched.iter().any(|&(_, id)| id == 0) {
        return 0.0;
    }
    let pool: u64 = matched.iter().map(|&(b, _)| price - b).sum();
    report as f64 + pool as f64 / matched.len() as f64 - c as f64
}

fn incentives() -> Verdict {
    let mut identity_bad = 0;
    for trial in 0..200 {
        let mut r = rng(12, trial);
        let price = ticks(r.random_range(20..=40));
        let start = r.random_range(1..=4u32);
        let tau = r.random_range(3..=7u32);
        let delay = r.random_range(1..tau);
        let own_cost = ticks(r.random_range(0..=price.ticks()));
        let mut others = Vec::new();
        for id in 1..=r.random_range(3..=8u32) {
            let begin = if r.random_bool(0.5) {
                r.random_range(0..start)
            } else {
                r.random_range(start + delay..=start + tau + 2)
            };
            others.push(Engagement {
                provider: id,
                job: id,
                reported_cost: ticks(r.random_range(0..=price.ticks())),
                price,
                start: begin,
                hours: r.random_range(1..=6),
            });
        }
        let own =
            |begin, hours| Engagement { provider: 0, job: 0, reported_cost: own_cost, price, start: begin, hours };
        let early: Vec<Engagement> = others.iter().cloned().chain([own(start, tau)]).collect();
        let late: Vec<Engagement> = others.iter().cloned().chain([own(start + delay, tau - delay)]).collect();
        let prefix: Ratio<i64> = (start..start + delay).map(|h| payment_oracle(&early, 0, h)).sum();
        if total_return(&early, 0) - total_return(&late, 0) != prefix || prefix <= Ratio::from_integer(0) {
            identity_bad += 1;
        }
        if !stake_early_identity(SEED, trial, 5, 2).holds() {
            identity_bad += 1;
        }
    }
    let trials = 10_000;
    let sc = CompetitiveScenario::competitive();
    let lib = compare_reports(&sc, sc.true_cost + ticks(3), trials, SEED);
    let diffs: Vec<f64> = (0..trials as u64)
        .map(|t| competitive_utility(&mut rng(121, t), 50) - competitive_utility(&mut rng(121, t), 53))
        .collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let ci = percentile_ci(&diffs, 2000, &mut rng(122, 0));
    verdict(
        identity_bad == 0 && lib.ci.0 > 0.0 && ci.0 > 0.0,
        format!(
            "prefix identity failures {identity_bad}/400; truthful minus +3 ticks over {trials} trials: library {:.3} \
             CI [{:.3}, {:.3}], oracle {mean:.3} CI [{:.3}, {:.3}]",
            lib.mean_diff, lib.ci.0, lib.ci.1, ci.0, ci.1
        ),
    )
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            for (k, v) in read_tree(&path) {
                out.insert(format!("{}/{k}", path.file_name().unwrap().to_string_lossy()), v);
            }
        } else {
            out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap());
        }
    }
    out
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_stakemarket"))
            .args(["verify-bounds", "--seed", "7", "--out"])
            .arg(&dir)
            .env_remove("STAKEMARKET_OUT")
            .output()
            .unwrap();
        (read_tree(&dir), status.stdout)
    };
    let (a, out_a) = run("a");
    let (b, out_b) = run("b");
    let identical = a == b && out_a == out_b;
    verdict(identical && a.len() > 1, format!("{} artifact files per run, byte-identical: {identical}", a.len()))
}

fn main() {
    type Check = fn() -> Verdict;
    let criteria: [(&str, u64, Check); 13] = [
        ("GSM optimality", 30, gsm_optimality),
        ("CFM D-regret bound", 120, cfm_dregret),
        ("S-regret bound", 30, sregret),
        ("fixed-point solver", 10, fixed_point),
        ("admissibility", 30, admissibility),
        ("pool sharing", 30, pool_sharing),
        ("monotone comparative statics", 30, comparative_statics),
        ("multi-period two-provider", 300, multiperiod),
        ("peel-and-load", 120, peel),
        ("complexity contracts", 120, complexity),
        ("race", 60, race),
        ("incentive simulations", 120, incentives),
        ("determinism", 120, determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let v = check();
        let elapsed = started.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let passed = v.passed && in_time;
        println!(
            "{} criterion {} {name}: {} [{:.2}s, limit {budget}s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            elapsed.as_secs_f64()
        );
        if !passed {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
