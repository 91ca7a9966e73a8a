//! Discrete-time engine for a two-sided compute market: load-based price
//! quoting, online matching of jobs to staked providers, pool-sharing
//! payouts, and executable checks of the regret and adversary bounds.

pub mod adversary;
pub mod bench;
pub mod config;
pub mod demand;
pub mod engine;
pub mod matching;
pub mod model;
pub mod money;
pub mod payout;
pub mod pricing;
pub mod race;
pub mod report;
pub mod rng;
pub mod verify;

pub use money::Money;
