//! Instrumented operation counts of the matchers as the pool grows.

use std::time::Instant;

use rand::Rng;

use crate::matching::{new_matcher, Algorithm, GsmFallback, PoolEntry};
use crate::money::Money;
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub algo: Algorithm,
    pub n: usize,
    pub jobs: usize,
    /// Mean operations per job, after the pool is built.
    pub ops_per_job: f64,
    pub nanos_per_job: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn series(&self, algo: Algorithm) -> Vec<&BenchRow> {
        self.rows.iter().filter(|r| r.algo == algo).collect()
    }

    /// Pearson correlation of ops per job against `log2 n`.
    pub fn log_correlation(&self, algo: Algorithm) -> f64 {
        let s = self.series(algo);
        let xs: Vec<f64> = s.iter().map(|r| (r.n as f64).log2()).collect();
        let ys: Vec<f64> = s.iter().map(|r| r.ops_per_job).collect();
        pearson(&xs, &ys)
    }

    /// Largest over smallest ops per job across pool sizes.
    pub fn spread(&self, algo: Algorithm) -> f64 {
        let ys: Vec<f64> = self.series(algo).iter().map(|r| r.ops_per_job).collect();
        let max = ys.iter().copied().fold(f64::MIN, f64::max);
        let min = ys.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// `n` providers with staking times uniform in `[1, 4n]` and costs uniform in
/// `[0, n)` ticks, and `n / 2` jobs with lengths uniform in `[1, 4n]`.
pub fn bench_instance(n: usize, seed: u64) -> (Vec<PoolEntry>, Vec<u32>) {
    let mut rng = stream(seed, "bench", n as u64);
    let top = 4 * n as u32;
    let pool = (0..n)
        .map(|i| PoolEntry::new(i as u32, rng.random_range(1..=top), Money::from_ticks(rng.random_range(0..n as u64))))
        .collect();
    let jobs = (0..n / 2).map(|_| rng.random_range(1..=top)).collect();
    (pool, jobs)
}

pub const BENCH_ALGOS: [Algorithm; 3] = [Algorithm::Gcm, Algorithm::Cfm, Algorithm::Gsm(GsmFallback::Reject)];

/// Runs every matcher on pool sizes `2^lo ..= 2^hi`, averaging `reps` seeds.
pub fn complexity_bench(lo: u32, hi: u32, reps: u64, seed: u64) -> BenchReport {
    let mut rows = Vec::new();
    for algo in BENCH_ALGOS {
        for k in lo..=hi {
            let n = 1usize << k;
            let (mut ops, mut nanos, mut jobs_total) = (0u64, 0u128, 0usize);
            for r in 0..reps {
                let (pool, jobs) = bench_instance(n, seed.wrapping_add(r));
                let price = Money::from_ticks(n as u64);
                let mut m = new_matcher(algo, &pool, price);
                let built = m.ops();
                let start = Instant::now();
                for &w in &jobs {
                    m.match_job(w);
                }
                nanos += start.elapsed().as_nanos();
                ops += m.ops() - built;
                jobs_total += jobs.len();
            }
            rows.push(BenchRow {
                algo,
                n,
                jobs: jobs_total,
                ops_per_job: ops as f64 / jobs_total as f64,
                nanos_per_job: nanos as f64 / jobs_total as f64,
            });
        }
    }
    BenchReport { rows }
}
