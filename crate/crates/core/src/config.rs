//! Scenario files: a TOML document with `[market]`, `[pricing]`,
//! `[[providers]]`, `[[jobs]]` or `[generator]`, `[run]` and an optional
//! `[race]` section. Money is written in currency units with at most one
//! decimal digit.

use std::path::Path;

use rand::Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::demand::{DemandError, ValueFunction};
use crate::engine::{BacklogMode, MarketParams};
use crate::matching::{Algorithm, GsmFallback};
use crate::model::{JobSpec, ProviderRecord, RestakePolicy};
use crate::money::Money;
use crate::pricing::{PricingFunction, PricingKind};
use crate::race::{RaceConfig, Racer, ToleranceWindow};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub floor: Money,
    /// Largest price the market may post.
    pub cap: Money,
    pub horizon: u32,
    #[serde(default = "default_window")]
    pub floor_window: usize,
    #[serde(default)]
    pub floor_update: bool,
    #[serde(default)]
    pub backlog: BacklogMode,
}

fn default_window() -> usize {
    3
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProviderSpec {
    pub id: u32,
    pub cost: Money,
    /// Defaults to the true cost.
    pub reported: Option<Money>,
    pub stake: u32,
    #[serde(default)]
    pub restake: RestakePolicy,
    #[serde(default)]
    pub arrival: u32,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum ValueSpec {
    /// `v(1), v(2), ...`.
    Values(Vec<Money>),
    /// `v(1), v(2) - v(1), ...`.
    Marginals(Vec<Money>),
    /// `scale * w^gamma` over `1..=support`, scale in currency units.
    Power { scale: f64, gamma: f64, support: u32 },
}

impl ValueSpec {
    pub fn build(&self) -> Result<ValueFunction, DemandError> {
        let ticks = |v: &[Money]| v.iter().map(|m| m.ticks() as i64).collect::<Vec<_>>();
        let v = match self {
            ValueSpec::Values(v) => ValueFunction::from_values(&ticks(v)),
            ValueSpec::Marginals(m) => ValueFunction::from_marginals(&ticks(m)),
            ValueSpec::Power { scale, gamma, support } => ValueFunction::power(scale * 10.0, *gamma, *support)?,
        };
        if !v.is_concave() {
            return Err(DemandError::NotConcave);
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobEntry {
    pub id: u32,
    pub budget: Money,
    pub deadline: u32,
    #[serde(default = "one")]
    pub min_run: u32,
    #[serde(default)]
    pub arrival: u32,
    pub value: ValueSpec,
}

fn one() -> u32 {
    1
}

/// Draws `count` jobs; every bound is inclusive.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobGenerator {
    pub count: u32,
    /// Defaults to `[run] seed`.
    pub seed: Option<u64>,
    pub budget: [Money; 2],
    pub deadline: [u32; 2],
    #[serde(default = "unit_range")]
    pub min_run: [u32; 2],
    pub arrival: [u32; 2],
    pub scale: [f64; 2],
    pub gamma: [f64; 2],
    pub support: [u32; 2],
}

fn unit_range() -> [u32; 2] {
    [1, 1]
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_algo")]
    pub algo: String,
    #[serde(default)]
    pub gsm_fallback: GsmFallback,
    #[serde(default)]
    pub seed: u64,
}

fn default_algo() -> String {
    "cfm".into()
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { algo: default_algo(), gsm_fallback: GsmFallback::default(), seed: 0 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RacerSpec {
    pub id: u32,
    pub true_time: u32,
    /// Defaults to the true time.
    pub quote: Option<u32>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RaceSection {
    pub price: Money,
    pub stake: Money,
    #[serde(default)]
    pub epsilon: u32,
    #[serde(default)]
    pub window: ToleranceWindow,
    /// Top of the 1-hour quote grid scanned by the best-response table.
    pub grid_max: Option<u32>,
    pub racers: Vec<RacerSpec>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub market: MarketSection,
    pub pricing: PricingKind,
    #[serde(default)]
    pub providers: Vec<ProviderSpec>,
    #[serde(default)]
    pub jobs: Vec<JobEntry>,
    pub generator: Option<JobGenerator>,
    #[serde(default)]
    pub run: RunSection,
    pub race: Option<RaceSection>,
}

/// A validated scenario ready for the engine.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub params: MarketParams,
    pub providers: Vec<ProviderRecord>,
    pub jobs: Vec<JobSpec>,
    pub algo: Algorithm,
    pub seed: u64,
    pub race: Option<(RaceConfig, u32)>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<Scenario, ConfigError> {
        let m = &self.market;
        if m.horizon == 0 {
            return Err(invalid("market.horizon", "must be positive"));
        }
        if m.floor_window == 0 {
            return Err(invalid("market.floor_window", "must be positive"));
        }
        let pricing = PricingFunction::new(self.pricing.clone(), m.floor, m.cap)
            .map_err(|e| invalid("pricing", e.to_string()))?;
        let params = MarketParams {
            pricing,
            horizon: m.horizon,
            floor_window: m.floor_window,
            floor_update: m.floor_update,
            backlog: m.backlog,
        };
        let mut providers = Vec::with_capacity(self.providers.len());
        for (i, p) in self.providers.iter().enumerate() {
            if p.stake == 0 {
                return Err(invalid(format!("providers[{i}].stake"), "must be positive"));
            }
            let reported = p.reported.unwrap_or(p.cost);
            providers.push(ProviderRecord::new(p.id, p.cost, reported, p.stake, p.restake, p.arrival));
        }
        let mut jobs = Vec::new();
        for (i, j) in self.jobs.iter().enumerate() {
            jobs.push(job_from_entry(j, &format!("jobs[{i}]"))?);
        }
        if let Some(g) = &self.generator {
            let base = self.jobs.iter().map(|j| j.id + 1).max().unwrap_or(0);
            jobs.extend(generate_jobs(g, g.seed.unwrap_or(self.run.seed), base)?);
        }
        let algo =
            Algorithm::parse(&self.run.algo, self.run.gsm_fallback).map_err(|e| invalid("run.algo", e.to_string()))?;
        let race = self.race.as_ref().map(race_config).transpose()?;
        Ok(Scenario { params, providers, jobs, algo, seed: self.run.seed, race })
    }
}

fn job_from_entry(j: &JobEntry, field: &str) -> Result<JobSpec, ConfigError> {
    if j.deadline == 0 {
        return Err(invalid(format!("{field}.deadline"), "must be positive"));
    }
    if j.min_run == 0 {
        return Err(invalid(format!("{field}.min_run"), "must be positive"));
    }
    let value = j.value.build().map_err(|e| invalid(format!("{field}.value"), e.to_string()))?;
    Ok(JobSpec::new(j.id, j.budget, j.deadline, j.min_run, value, j.arrival))
}

fn ordered<T: PartialOrd + std::fmt::Debug>(r: &[T; 2], field: &str) -> Result<(), ConfigError> {
    if r[0] > r[1] {
        return Err(invalid(format!("generator.{field}"), format!("range {r:?} is empty")));
    }
    Ok(())
}

/// Each job draws from its own stream, so adding jobs never shifts earlier draws.
pub fn generate_jobs(g: &JobGenerator, seed: u64, first_id: u32) -> Result<Vec<JobSpec>, ConfigError> {
    ordered(&g.budget, "budget")?;
    ordered(&g.deadline, "deadline")?;
    ordered(&g.min_run, "min_run")?;
    ordered(&g.arrival, "arrival")?;
    ordered(&g.scale, "scale")?;
    ordered(&g.gamma, "gamma")?;
    ordered(&g.support, "support")?;
    if g.deadline[0] == 0 || g.min_run[0] == 0 || g.support[0] == 0 {
        return Err(invalid("generator", "deadline, min_run and support must be positive"));
    }
    (0..g.count)
        .map(|i| {
            let mut rng = stream(seed, "job", i as u64);
            let budget = Money::from_ticks(rng.random_range(g.budget[0].ticks()..=g.budget[1].ticks()));
            let deadline = rng.random_range(g.deadline[0]..=g.deadline[1]);
            let min_run = rng.random_range(g.min_run[0]..=g.min_run[1]);
            let arrival = rng.random_range(g.arrival[0]..=g.arrival[1]);
            let scale = rng.random_range(g.scale[0]..=g.scale[1]);
            let gamma = rng.random_range(g.gamma[0]..=g.gamma[1]);
            let support = rng.random_range(g.support[0]..=g.support[1]);
            let value =
                ValueFunction::power(scale * 10.0, gamma, support).map_err(|e| invalid("generator", e.to_string()))?;
            Ok(JobSpec::new(first_id + i, budget, deadline, min_run, value, arrival))
        })
        .collect()
}

fn race_config(r: &RaceSection) -> Result<(RaceConfig, u32), ConfigError> {
    if r.racers.is_empty() {
        return Err(invalid("race.racers", "at least one racer is required"));
    }
    let racers: Vec<Racer> = r
        .racers
        .iter()
        .map(|s| Racer { id: s.id, true_time: s.true_time, quote: s.quote.unwrap_or(s.true_time) })
        .collect();
    let top = racers.iter().map(|x| x.true_time.max(x.quote)).max().expect("nonempty") + r.epsilon + 1;
    let grid_max = r.grid_max.unwrap_or(top);
    let cfg = RaceConfig { price: r.price, stake: r.stake, epsilon: r.epsilon, window: r.window, racers };
    Ok((cfg, grid_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[market]
floor = 1.0
cap = 3.0
horizon = 4

[pricing]
kind = "linear-capped"
slope = 1.0

[[providers]]
id = 0
cost = 0.8
stake = 3
restake = "cyclic"

[[jobs]]
id = 0
budget = 5.0
deadline = 3
value = { marginals = [2.0, 1.5, 1.0] }
"#;

    #[test]
    fn minimal_scenario_validates() {
        let s = ScenarioConfig::parse(MINIMAL).unwrap().validate().unwrap();
        assert_eq!(s.algo, Algorithm::Cfm);
        assert_eq!(s.providers[0].reported_cost, Money::from_ticks(8));
        assert_eq!(s.jobs[0].value.value(3).unwrap(), 45);
    }

    #[test]
    fn negative_budget_is_rejected_with_location() {
        let text = MINIMAL.replace("budget = 5.0", "budget = -5.0");
        let err = ScenarioConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("budget"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn off_tick_money_is_rejected() {
        let text = MINIMAL.replace("cost = 0.8", "cost = 0.85");
        assert!(ScenarioConfig::parse(&text).is_err());
    }

    #[test]
    fn generator_is_stable_under_count_changes() {
        let g = JobGenerator {
            count: 5,
            seed: None,
            budget: [Money::from_units(1), Money::from_units(9)],
            deadline: [1, 5],
            min_run: [1, 1],
            arrival: [0, 4],
            scale: [1.0, 3.0],
            gamma: [0.5, 1.0],
            support: [1, 4],
        };
        let small = generate_jobs(&g, 3, 0).unwrap();
        let big = generate_jobs(&JobGenerator { count: 8, ..g }, 3, 0).unwrap();
        assert_eq!(small[..], big[..5]);
    }
}
