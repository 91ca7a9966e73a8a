//! Run-directory artifacts: `prices.csv`, `matches.csv`, `payouts.csv` and
//! `summary.txt`. Each CSV opens with a versioned `#` comment line.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use num_rational::Ratio;

use crate::engine::{MarketState, PeriodReport};

pub const FORMAT_VERSION: u32 = 1;

/// Signed tick count as a one-decimal amount.
pub fn signed_ticks(t: i64) -> String {
    let sign = if t < 0 { "-" } else { "" };
    let a = t.unsigned_abs();
    format!("{sign}{}.{}", a / 10, a % 10)
}

/// Load to four decimals, `-` when undefined.
pub fn load_text(load: Option<Ratio<u64>>) -> String {
    match load {
        Some(r) => format!("{:.4}", *r.numer() as f64 / *r.denom() as f64),
        None => "-".into(),
    }
}

fn csv_writer(path: &Path, kind: &str) -> io::Result<csv::Writer<fs::File>> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "# stakemarket {kind} v{FORMAT_VERSION}")?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_prices(path: &Path, history: &[PeriodReport]) -> io::Result<()> {
    let mut w = csv_writer(path, "prices")?;
    w.write_record([
        "period",
        "floor",
        "price",
        "clamped",
        "load",
        "floor_supply",
        "demand",
        "submitted",
        "matched",
        "infeasible",
        "rejected",
        "treasury_delta",
        "next_floor",
    ])
    .map_err(csv_err)?;
    for r in history {
        w.write_record([
            r.period.to_string(),
            r.floor.to_string(),
            r.price.to_string(),
            r.clamped.to_string(),
            load_text(r.load),
            r.floor_supply.to_string(),
            r.demand.to_string(),
            r.submitted.to_string(),
            r.matched().to_string(),
            r.infeasible().to_string(),
            r.rejected.to_string(),
            signed_ticks(r.treasury_delta),
            r.next_floor.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_matches(path: &Path, history: &[PeriodReport]) -> io::Result<()> {
    let mut w = csv_writer(path, "matches")?;
    w.write_record(["period", "provider", "job", "price", "feasible"]).map_err(csv_err)?;
    for e in history.iter().flat_map(|r| &r.ledger.pairs) {
        w.write_record([
            e.period.to_string(),
            e.provider.to_string(),
            e.job.to_string(),
            e.price.to_string(),
            e.feasible.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_payouts(path: &Path, history: &[PeriodReport]) -> io::Result<()> {
    let mut w = csv_writer(path, "payouts")?;
    w.write_record(["period", "provider", "base", "premium_share", "paid", "cumulative", "treasury_delta"])
        .map_err(csv_err)?;
    for p in history.iter().flat_map(|r| &r.payouts) {
        w.write_record([
            p.period.to_string(),
            p.provider.to_string(),
            p.base.to_string(),
            p.premium_share.to_string(),
            p.paid.to_string(),
            p.cumulative.to_string(),
            signed_ticks(p.treasury_delta),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn summary_text(state: &MarketState, algo: &str) -> String {
    let h = &state.history;
    let mut out = format!("# stakemarket summary v{FORMAT_VERSION}\n");
    out += &format!("matcher {algo}\nperiods {}\n", h.len());
    out += &format!(
        "matched {}\ninfeasible {}\nrejected {}\n",
        h.iter().map(PeriodReport::matched).sum::<usize>(),
        h.iter().map(PeriodReport::infeasible).sum::<usize>(),
        h.iter().map(|r| r.rejected).sum::<usize>()
    );
    out += &format!("treasury {}\n", signed_ticks(h.iter().map(|r| r.treasury_delta).sum()));
    out += &format!("final_floor {}\n\n", state.floor);
    out += "period price load floor_supply demand matched infeasible treasury_delta floor\n";
    for r in h {
        out += &format!(
            "{} {} {} {} {} {} {} {} {}\n",
            r.period,
            r.price,
            load_text(r.load),
            r.floor_supply,
            r.demand,
            r.matched(),
            r.infeasible(),
            signed_ticks(r.treasury_delta),
            r.floor
        );
    }
    out
}

/// Writes all four artifacts into `dir`, creating it if needed.
pub fn write_run(dir: &Path, state: &MarketState, algo: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_prices(&dir.join("prices.csv"), &state.history)?;
    write_matches(&dir.join("matches.csv"), &state.history)?;
    write_payouts(&dir.join("payouts.csv"), &state.history)?;
    fs::write(dir.join("summary.txt"), summary_text(state, algo))
}
