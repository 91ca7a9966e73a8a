//! Property suites behind `verify-bounds`. Every suite is seeded and writes
//! deterministic text, so two runs with one seed give identical artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;

use crate::adversary::{
    anti_sorted_instances, build_tight_pair_instance, compare_reports, compare_two_provider, d_regret, delay_dominance,
    gap1_window, incentive_best_response, monopoly_check, peel_and_load, peel_brute_force, s_regret,
    stake_early_identity, supply_regret_bound, AdversaryRules, CompetitiveScenario, Instance,
};
use crate::bench::complexity_bench;
use crate::demand::{decide, exhaustive_hours, ValueFunction};
use crate::matching::{deficiency, oracle_max_feasible, run_sequence, Algorithm, GsmFallback, PoolEntry, UnknownName};
use crate::money::Money;
use crate::payout::{hourly_payment, Engagement};
use crate::pricing::{check_admissibility, solve_equilibrium_quote, PricingFunction, PricingKind};
use crate::race::{best_response_scan, random_config, run_race};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Gsm,
    Dregret,
    Sregret,
    Pricing,
    Admissibility,
    Payout,
    Statics,
    Multiperiod,
    Peel,
    Complexity,
    Race,
    Incentive,
}

impl Suite {
    pub const ALL: [Suite; 12] = [
        Suite::Gsm,
        Suite::Dregret,
        Suite::Sregret,
        Suite::Pricing,
        Suite::Admissibility,
        Suite::Payout,
        Suite::Statics,
        Suite::Multiperiod,
        Suite::Peel,
        Suite::Complexity,
        Suite::Race,
        Suite::Incentive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gsm => "gsm",
            Suite::Dregret => "dregret",
            Suite::Sregret => "sregret",
            Suite::Pricing => "pricing",
            Suite::Admissibility => "admissibility",
            Suite::Payout => "payout",
            Suite::Statics => "statics",
            Suite::Multiperiod => "multiperiod",
            Suite::Peel => "peel",
            Suite::Complexity => "complexity",
            Suite::Race => "race",
            Suite::Incentive => "incentive",
        }
    }
}

impl FromStr for Suite {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| UnknownName(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteResult {
    pub suite: Suite,
    pub passed: bool,
    pub summary: String,
    pub details: Vec<String>,
    /// Extra artifact as `(file name, contents)`.
    pub artifact: Option<(String, String)>,
}

impl SuiteResult {
    fn new(suite: Suite, passed: bool, summary: String) -> Self {
        SuiteResult { suite, passed, summary, details: Vec::new(), artifact: None }
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{verdict} {}: {}", self.suite.name(), self.summary)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteResult {
    match suite {
        Suite::Gsm => gsm_suite(seed, |t, j| deficiency(t, j).delta),
        Suite::Dregret => dregret_suite(seed),
        Suite::Sregret => sregret_suite(seed),
        Suite::Pricing => pricing_suite(seed),
        Suite::Admissibility => admissibility_suite(seed),
        Suite::Payout => payout_suite(seed),
        Suite::Statics => statics_suite(seed),
        Suite::Multiperiod => multiperiod_suite(&DEFAULT_PAIRS),
        Suite::Peel => peel_suite(),
        Suite::Complexity => complexity_suite(seed),
        Suite::Race => race_suite(seed),
        Suite::Incentive => incentive_suite(seed),
    }
}

/// Writes `report.txt` plus each suite's own artifact into `dir`.
pub fn write_artifacts(dir: &Path, results: &[SuiteResult]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut report = String::from("# stakemarket verify-bounds v1\n");
    for r in results {
        report += &r.line();
        report.push('\n');
        for d in &r.details {
            report += "  ";
            report += d;
            report.push('\n');
        }
    }
    fs::write(dir.join("report.txt"), report)?;
    for (name, body) in results.iter().filter_map(|r| r.artifact.as_ref()) {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

/// Uniform random single-period instance.
pub fn random_instance(seed: u64, kind: &str, index: u64, max_m: usize, max_n: usize, max_tau: u32) -> Instance {
    let mut rng = stream(seed, kind, index);
    let floor = Money::from_ticks(rng.random_range(5..=20));
    let price = floor + Money::from_ticks(rng.random_range(0..=10));
    let m = rng.random_range(1..=max_m);
    let n = rng.random_range(1..=max_n);
    let pool = (0..m)
        .map(|i| {
            let cost = Money::from_ticks(rng.random_range(floor.ticks()..=price.ticks()));
            PoolEntry::new(i as u32, rng.random_range(1..=max_tau), cost)
        })
        .collect();
    let jobs = (0..n).map(|_| rng.random_range(1..=max_tau)).collect();
    Instance { pool, jobs, price, floor }
}

/// GSM matched count against the deficiency formula (computed by `delta`)
/// and the brute-force oracle on 1,000 instances.
pub fn gsm_suite(seed: u64, delta: impl Fn(&[u32], &[u32]) -> usize) -> SuiteResult {
    let mut bad = Vec::new();
    let total = 1000;
    for i in 0..total {
        let inst = random_instance(seed, "gsm", i, 8, 8, 6);
        let taus: Vec<u32> = inst.pool.iter().map(|p| p.tau).collect();
        let got = run_sequence(Algorithm::Gsm(GsmFallback::Reject), &inst.pool, &inst.jobs).feasible();
        let formula = inst.n() as i64 - delta(&taus, &inst.jobs) as i64;
        let oracle = oracle_max_feasible(&inst.pool, &inst.jobs).expect("within oracle limit");
        if got as i64 != formula || got != oracle {
            bad.push(format!(
                "instance {i}: gsm {got}, n - delta {formula}, oracle {oracle}, taus {taus:?}, jobs {:?}",
                inst.jobs
            ));
        }
    }
    let mut r = SuiteResult::new(Suite::Gsm, bad.is_empty(), format!("{total} instances, {} mismatches", bad.len()));
    r.details = bad.into_iter().take(20).collect();
    r
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

/// Exhaustive arrival orders for every shape `m, n <= 6`, ten instances per
/// shape, plus the tight-pair constructions. The bound is checked on the
/// rejecting CFM; the market CFM, whose fallback consumes a provider, is
/// tallied alongside.
pub fn dregret_suite(seed: u64) -> SuiteResult {
    let mut csv = String::from("# stakemarket regret v1\nm,n,instance,orders,max_dregret,max_dregret_fallback,bound\n");
    let (mut violations, mut fallback_violations, mut orders) = (0, 0, 0);
    for m in 1..=6usize {
        for n in 1..=6usize {
            for k in 0..10u64 {
                let mut rng = stream(seed, "dregret", (m * 10 + n) as u64 * 10 + k);
                let floor = Money::from_ticks(10);
                let pool: Vec<PoolEntry> = (0..m)
                    .map(|i| {
                        PoolEntry::new(
                            i as u32,
                            rng.random_range(1..=5),
                            floor + Money::from_ticks(rng.random_range(0..=3)),
                        )
                    })
                    .collect();
                let jobs: Vec<u32> = (0..n).map(|_| rng.random_range(1..=5)).collect();
                let (mut worst, mut worst_fallback) = (i64::MIN, i64::MIN);
                let all = permutations(&jobs);
                for order in &all {
                    let inst = Instance {
                        pool: pool.clone(),
                        jobs: order.clone(),
                        price: floor + Money::from_ticks(3),
                        floor,
                    };
                    let d = d_regret(&inst, Algorithm::CfmReject);
                    let df = d_regret(&inst, Algorithm::Cfm);
                    worst = worst.max(d);
                    worst_fallback = worst_fallback.max(df);
                    orders += 1;
                    violations += usize::from(d > (n / 2) as i64);
                    fallback_violations += usize::from(df > (n / 2) as i64);
                }
                writeln!(csv, "{m},{n},{k},{},{worst},{worst_fallback},{}", all.len(), n / 2).expect("string write");
            }
        }
    }
    let mut tight = Vec::new();
    for k in 1..=3 {
        let inst = build_tight_pair_instance(k);
        let d = d_regret(&inst, Algorithm::CfmReject);
        let df = d_regret(&inst, Algorithm::Cfm);
        tight.push(d == (inst.n() / 2) as i64 && df == d);
        writeln!(csv, "tight,{},{k},1,{d},{df},{}", inst.n(), inst.n() / 2).expect("string write");
    }
    let passed = violations == 0 && tight.iter().all(|&t| t);
    let mut r = SuiteResult::new(
        Suite::Dregret,
        passed,
        format!(
            "{orders} arrival orders, {violations} violations (fallback CFM: {fallback_violations}), tight pairs at bound: {tight:?}"
        ),
    );
    r.artifact = Some(("regret.csv".into(), csv));
    r
}

pub fn sregret_suite(seed: u64) -> SuiteResult {
    let mut bad = Vec::new();
    let total = 1000;
    for i in 0..total {
        let inst = random_instance(seed, "sregret", i, 8, 8, 6);
        let excess = s_regret(&inst, Algorithm::Cfm);
        let bound = supply_regret_bound(inst.m(), inst.n(), inst.price, inst.floor).ticks() as i64;
        if excess > bound {
            bad.push(format!("instance {i}: excess {excess} > bound {bound}"));
        }
    }
    let mut r =
        SuiteResult::new(Suite::Sregret, bad.is_empty(), format!("{total} instances, {} violations", bad.len()));
    r.details = bad.into_iter().take(20).collect();
    r
}

fn load(demand: f64, floor_supply: u64) -> f64 {
    if demand <= floor_supply as f64 {
        1.0
    } else {
        demand / floor_supply as f64
    }
}

/// Random pricing function and non-increasing step demand over its bracket.
pub fn random_curve_pair(seed: u64, index: u64) -> (PricingFunction, Vec<f64>, u64) {
    let mut rng = stream(seed, "pricing", index);
    let floor = Money::from_ticks(rng.random_range(5..=30));
    let cap = floor + Money::from_ticks(rng.random_range(5..=60));
    let kind = match rng.random_range(0..3) {
        0 => PricingKind::LinearCapped { slope: rng.random_range(0.2..3.0) },
        1 => PricingKind::ConcavePower { gamma: rng.random_range(0.2..2.0) },
        _ => {
            let mut points = vec![(1.0, 1.0)];
            let (mut a, mut m) = (1.0, 1.0);
            for _ in 0..rng.random_range(1..=4) {
                a += rng.random_range(0.2..1.5);
                m += rng.random_range(0.1..1.0);
                points.push((a, m));
            }
            PricingKind::Tabulated { points }
        }
    };
    let f = PricingFunction::new(kind, floor, cap).expect("valid construction");
    let floor_supply = rng.random_range(1..=20);
    let mut d = rng.random_range(0..=80u64) as f64;
    let demand = (floor.ticks()..=cap.ticks())
        .map(|_| {
            let here = d;
            d = (d - rng.random_range(0..=3u64) as f64).max(0.0);
            here
        })
        .collect();
    (f, demand, floor_supply)
}

pub fn pricing_suite(seed: u64) -> SuiteResult {
    let total = 200;
    let mut bad = Vec::new();
    for i in 0..total {
        let (f, demand, s_f) = random_curve_pair(seed, i);
        let base = f.floor.ticks();
        let curve = |p: Money| demand[(p.ticks() - base) as usize];
        let quote = solve_equilibrium_quote(&f, &curve, s_f).expect("monotone demand");
        let scan = (base..=f.cap.ticks())
            .find(|&p| p as f64 - f.eval(load(curve(Money::from_ticks(p)), s_f)) >= -1e-9 * p as f64)
            .unwrap_or(f.cap.ticks());
        let loads: Vec<f64> = demand.iter().map(|&d| load(d, s_f)).collect();
        let monotone = loads.windows(2).all(|w| w[1] <= w[0]);
        if quote.price.ticks() != scan || !monotone {
            bad.push(format!("pair {i}: solver {} scan {scan} load monotone {monotone}", quote.price.ticks()));
        }
    }
    let mut r =
        SuiteResult::new(Suite::Pricing, bad.is_empty(), format!("{total} curve pairs, {} mismatches", bad.len()));
    r.details = bad;
    r
}

/// Linear supply of slope `a` from `S_f` at the floor, demand crossing it
/// at `P_adm` with unit regular-crossing slack, and a linear pricing
/// function with `f'(1) = c S_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityCase {
    pub floor: Money,
    pub p_adm: Money,
    pub floor_supply: u64,
    pub supply_slope: f64,
    pub responsiveness: f64,
}

impl AdmissibilityCase {
    pub fn random(seed: u64, index: u64) -> Self {
        let mut rng = stream(seed, "admissibility", index);
        let floor = Money::from_ticks(rng.random_range(10..=40));
        AdmissibilityCase {
            floor,
            p_adm: floor + Money::from_ticks(rng.random_range(1..=20)),
            floor_supply: rng.random_range(1..=10),
            supply_slope: rng.random_range(0.0..=1.0),
            responsiveness: rng.random_range(1.0..=3.0),
        }
    }

    pub fn supply(&self, p: Money) -> f64 {
        self.floor_supply as f64 + self.supply_slope * p.diff(self.floor) as f64
    }

    pub fn demand(&self, p: Money) -> f64 {
        (self.supply(p) + self.p_adm.diff(p) as f64).max(0.0)
    }

    pub fn pricing(&self) -> PricingFunction {
        let kappa = self.responsiveness * self.floor_supply as f64 / self.floor.ticks() as f64;
        let cap = self.floor + Money::from_ticks(400);
        PricingFunction::linear(kappa, self.floor, cap).expect("positive slope")
    }

    /// Solved quote and whether supply covers demand there.
    pub fn solve(&self) -> (Money, bool) {
        let f = self.pricing();
        let d = |p: Money| self.demand(p);
        let s = |p: Money| self.supply(p);
        let q = solve_equilibrium_quote(&f, &d, self.floor_supply).expect("monotone demand");
        (q.price, check_admissibility(&s, &d, q.price, f.floor, f.cap).admissible)
    }

    /// Sufficient condition derived for this family: `c a >= 1`.
    pub fn derived_condition(&self) -> bool {
        self.responsiveness * self.supply_slope >= 1.0
    }
}

pub fn admissibility_suite(seed: u64) -> SuiteResult {
    let total = 100;
    let mut admissible = 0;
    let mut derived_bad = 0;
    let mut derived_cases = 0;
    let mut csv = String::from(
        "# stakemarket admissibility v1\ncase,floor,p_adm,floor_supply,supply_slope,responsiveness,quote,admissible\n",
    );
    for i in 0..total {
        let case = AdmissibilityCase::random(seed, i);
        let (q, ok) = case.solve();
        admissible += usize::from(ok);
        if case.derived_condition() {
            derived_cases += 1;
            derived_bad += usize::from(!ok);
        }
        writeln!(
            csv,
            "{i},{},{},{},{:.4},{:.4},{q},{ok}",
            case.floor, case.p_adm, case.floor_supply, case.supply_slope, case.responsiveness
        )
        .expect("string write");
    }
    let mut r = SuiteResult::new(
        Suite::Admissibility,
        admissible == total as usize && derived_bad == 0,
        format!("{admissible}/{total} constructions admissible; derived condition c*a >= 1 held on {derived_cases} cases with {derived_bad} failures"),
    );
    r.artifact = Some(("admissibility.csv".into(), csv));
    r
}

pub fn payout_suite(seed: u64) -> SuiteResult {
    let mut failures = Vec::new();
    for i in 0..500 {
        let mut rng = stream(seed, "cohort", i);
        let price = Money::from_ticks(rng.random_range(1..=50));
        let n = rng.random_range(1..=8u32);
        let ledger: Vec<Engagement> = (0..n)
            .map(|id| Engagement {
                provider: id,
                job: id,
                reported_cost: Money::from_ticks(rng.random_range(0..=price.ticks())),
                price,
                start: 0,
                hours: 1,
            })
            .collect();
        let total: Ratio<i64> = (0..n).map(|id| hourly_payment(&ledger, id, 0).expect("working")).sum();
        if total != Ratio::from_integer((price * n as u64).ticks() as i64) {
            failures.push(format!("cohort {i}: payments {total} != n P"));
        }
    }
    for i in 0..500 {
        let mut rng = stream(seed, "staggered", i);
        let ledger: Vec<Engagement> = (0..rng.random_range(1..=6u32))
            .map(|id| {
                let price = Money::from_ticks(rng.random_range(1..=50));
                Engagement {
                    provider: id,
                    job: id,
                    reported_cost: Money::from_ticks(rng.random_range(0..=price.ticks())),
                    price,
                    start: rng.random_range(0..5),
                    hours: rng.random_range(1..=5),
                }
            })
            .collect();
        for e in &ledger {
            for h in e.start..e.start + e.hours {
                let pay = hourly_payment(&ledger, e.provider, h).expect("working");
                if pay < Ratio::from_integer(e.reported_cost.ticks() as i64) {
                    failures.push(format!("ledger {i}: provider {} paid {pay} below its cost at hour {h}", e.provider));
                }
            }
        }
    }
    let e = |provider, cost, start| Engagement {
        provider,
        job: provider,
        reported_cost: Money::from_ticks(cost),
        price: Money::from_ticks(10),
        start,
        hours: 3,
    };
    let example = [e(1, 4, 1), e(2, 6, 2)];
    let pair = (hourly_payment(&example, 1, 2), hourly_payment(&example, 2, 2));
    if pair != (Ok(Ratio::from_integer(9)), Ok(Ratio::from_integer(10))) {
        failures.push(format!("staggered example settled to {pair:?}"));
    }
    let mut r = SuiteResult::new(
        Suite::Payout,
        failures.is_empty(),
        format!(
            "500 cohorts balanced, 500 staggered ledgers above cost, staggered example (9, 10); {} failures",
            failures.len()
        ),
    );
    r.details = failures.into_iter().take(20).collect();
    r
}

pub fn statics_suite(seed: u64) -> SuiteResult {
    let mut failures = Vec::new();
    for i in 0..500 {
        let mut rng = stream(seed, "statics", i);
        let v =
            ValueFunction::power(rng.random_range(5.0..80.0), rng.random_range(0.3..=1.0), rng.random_range(1..=10))
                .expect("valid parameters");
        let budget = Money::from_ticks(rng.random_range(1..=300));
        let deadline = rng.random_range(1..=10);
        let min_run = rng.random_range(1..=3);
        let hi = Money::from_ticks(rng.random_range(2..=60));
        let lo = Money::from_ticks(rng.random_range(1..hi.ticks()));
        let a = decide(&v, budget, deadline, min_run, lo).expect("valid user");
        let b = decide(&v, budget, deadline, min_run, hi).expect("valid user");
        let holds = a.max_hours >= b.max_hours
            && a.marginal_count >= b.marginal_count
            && a.hours >= b.hours
            && (a.hours > 0) >= (b.hours > 0);
        if !holds {
            failures.push(format!("user {i}: at {lo} {a:?}; at {hi} {b:?}"));
        }
        for (p, d) in [(lo, a), (hi, b)] {
            let brute = exhaustive_hours(&v, budget, deadline, min_run, p);
            if brute != d.hours {
                failures.push(format!("user {i} at {p}: closed form {} exhaustive {brute}", d.hours));
            }
        }
    }
    let mut r =
        SuiteResult::new(Suite::Statics, failures.is_empty(), format!("500 users, {} failures", failures.len()));
    r.details = failures.into_iter().take(20).collect();
    r
}

pub const DEFAULT_PAIRS: [(u32, u32); 5] = [(2, 3), (2, 4), (3, 4), (3, 5), (4, 6)];

/// Exhaustive search on `pairs` under the default adversary rules, plus the
/// gap-1 window structure for every pair with hyper-period at most 60.
pub fn multiperiod_suite(pairs: &[(u32, u32)]) -> SuiteResult {
    let mut details = Vec::new();
    let mut passed = true;
    for &(s, l) in pairs {
        match compare_two_provider(s, l, AdversaryRules::default()) {
            Ok(rep) => {
                passed &= rep.holds();
                details.push(format!(
                    "({s},{l}) L={} coprime={} cfm={} gsm={} excess={} max_per_period={} cycle_violations={} window={:?} holds={}",
                    rep.hyper_period,
                    rep.coprime,
                    rep.cfm.max_infeasible,
                    rep.gsm.max_infeasible,
                    rep.excess(),
                    rep.cfm.max_per_period.max(rep.gsm.max_per_period),
                    rep.cfm.cycle_violations + rep.gsm.cycle_violations,
                    rep.window.block(),
                    rep.holds()
                ));
            }
            Err(e) => {
                passed = false;
                details.push(format!("({s},{l}) {e}"));
            }
        }
    }
    let mut windows = 0;
    let mut window_bad = 0;
    for s in 2..60u32 {
        for l in s + 1..=60 {
            let w = gap1_window(s, l);
            if w.hyper_period <= 60 {
                windows += 1;
                if !w.matches_structure() {
                    window_bad += 1;
                    details.push(format!("window ({s},{l}) {:?}", w.times));
                }
            }
        }
    }
    passed &= window_bad == 0;
    let mut r = SuiteResult::new(
        Suite::Multiperiod,
        passed,
        format!(
            "{} stake pairs searched, {windows} gap-1 windows checked, {window_bad} structure mismatches",
            pairs.len()
        ),
    );
    r.details = details;
    r
}

/// Thresholds against brute force on every descending list with `m <= 5`
/// and `2 <= tau <= 6`. The CFM formula must agree everywhere; GSM
/// disagreements are listed in `peel.csv`.
pub fn peel_suite() -> SuiteResult {
    let mut csv = String::from("# stakemarket peel v1\ntaus,policy,formula_u_max,brute_force\n");
    let (mut cfm_bad, mut gsm_bad, mut over, mut total) = (0, 0, 0, 0);
    for taus in anti_sorted_instances(5, 6) {
        total += 1;
        let rep = peel_and_load(&taus).expect("valid list");
        let m = taus.len();
        let list = taus.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
        for (policy, algo, formula) in
            [("cfm", Algorithm::Cfm, rep.u_max_cfm()), ("gsm", Algorithm::Gsm(GsmFallback::Longest), rep.u_max_gsm())]
        {
            let brute = peel_brute_force(&taus, algo).expect("valid list");
            if brute + 1 > m.max(1) {
                over += 1;
            }
            if formula != Some(brute) {
                if policy == "cfm" {
                    cfm_bad += 1;
                } else {
                    gsm_bad += 1;
                }
                let f = formula.map_or("none".to_string(), |u| u.to_string());
                writeln!(csv, "{list},{policy},{f},{brute}").expect("string write");
            }
        }
    }
    let mut r = SuiteResult::new(
        Suite::Peel,
        cfm_bad == 0 && over == 0,
        format!("{total} lists; cfm disagreements {cfm_bad}; gsm disagreements {gsm_bad} (reported); brute force above m-1: {over}"),
    );
    r.artifact = Some(("peel.csv".into(), csv));
    r
}

pub fn complexity_suite(seed: u64) -> SuiteResult {
    let rep = complexity_bench(4, 16, 3, seed);
    let corr = rep.log_correlation(Algorithm::Cfm);
    let spread = rep.spread(Algorithm::Gcm);
    let mut csv = String::from("# stakemarket complexity v1\nalgo,n,jobs,ops_per_job\n");
    for row in &rep.rows {
        writeln!(csv, "{},{},{},{:.4}", row.algo, row.n, row.jobs, row.ops_per_job).expect("string write");
    }
    let mut r = SuiteResult::new(
        Suite::Complexity,
        corr >= 0.99 && spread <= 2.0,
        format!("cfm ops vs log2 n correlation {corr:.4}; gcm ops spread {spread:.3}"),
    );
    r.artifact = Some(("complexity.csv".into(), csv));
    r
}

pub fn race_suite(seed: u64) -> SuiteResult {
    let mut failures = Vec::new();
    let mut configs = 0;
    for epsilon in 0..=2 {
        for i in 0..200 {
            configs += 1;
            let (mut cfg, grid) = random_config(seed, i, epsilon);
            let mut lowest = Vec::new();
            for k in 0..cfg.racers.len() {
                let scan = best_response_scan(&cfg, k, &grid).expect("valid stake");
                if !scan.within_window() {
                    failures.push(format!(
                        "eps {epsilon} config {i} racer {k}: undominated {:?} true {}",
                        scan.undominated, scan.true_time
                    ));
                }
                lowest.push(scan.lowest_undominated().expect("some quote is undominated"));
            }
            for (r, q) in cfg.racers.iter_mut().zip(lowest) {
                r.quote = q;
            }
            let out = run_race(&cfg).expect("valid race");
            let best = cfg.racers.iter().map(|r| r.true_time).min().expect("nonempty");
            if out.true_time != best || out.quote.abs_diff(best) > epsilon {
                failures.push(format!(
                    "eps {epsilon} config {i}: winner time {} quote {} best {best}",
                    out.true_time, out.quote
                ));
            }
        }
    }
    let mut r =
        SuiteResult::new(Suite::Race, failures.is_empty(), format!("{configs} configs, {} failures", failures.len()));
    r.details = failures.into_iter().take(20).collect();
    r
}

pub fn incentive_suite(seed: u64) -> SuiteResult {
    let mut details = Vec::new();
    let identity_bad = (0..200).filter(|&t| !stake_early_identity(seed, t, 5, 2).holds()).count();
    details.push(format!("stake-early identity: {identity_bad} failures over 200 scripted schedules"));
    let sc = CompetitiveScenario::competitive();
    let cmp = compare_reports(&sc, sc.true_cost + Money::from_ticks(3), 10_000, seed);
    details.push(format!(
        "truthful vs +3 ticks: mean {:.4} vs {:.4}, diff {:.4}, 95% CI [{:.4}, {:.4}]",
        cmp.mean_a, cmp.mean_b, cmp.mean_diff, cmp.ci.0, cmp.ci.1
    ));
    let grid: Vec<Money> = (0..=8).map(|k| sc.true_cost + Money::from_ticks(k)).collect();
    let curve = incentive_best_response(&sc, &grid, 10_000, seed);
    let best = curve.best();
    details.push(format!(
        "best report on grid: {} (means {})",
        best.map_or("-".into(), |m| m.to_string()),
        curve.means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" ")
    ));
    let mono = monopoly_check(&CompetitiveScenario::monopoly(), 3, 2000, seed);
    let open = monopoly_check(&CompetitiveScenario::uncontested(), 3, 2000, seed);
    details.push(format!(
        "without competition truthful edge vanishes: monopoly diff {:.4}, all-matched cohort diff {:.4}",
        mono.mean_diff, open.mean_diff
    ));
    let delay = delay_dominance(5, 2000, seed);
    details.push(format!(
        "staking delay 0..4 mean returns {}; late strictly better in {:?} of {} trials",
        delay.mean_returns.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" "),
        delay.late_wins,
        delay.trials
    ));
    let passed = identity_bad == 0
        && cmp.a_wins()
        && best == Some(sc.true_cost)
        && !mono.a_wins()
        && open.mean_diff < 0.0
        && delay.early_weakly_dominates();
    let mut r = SuiteResult::new(
        Suite::Incentive,
        passed,
        format!(
            "identity exact, truthful edge CI lower bound {:.4}, early staking dominates on average: {}",
            cmp.ci.0,
            delay.early_weakly_dominates()
        ),
    );
    r.details = details;
    r
}
