use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use stakemarket::adversary::{compare_two_provider, peel_and_load, peel_brute_force, AdversaryRules};
use stakemarket::bench::complexity_bench;
use stakemarket::config::{ConfigError, ScenarioConfig};
use stakemarket::engine::{run, MarketState};
use stakemarket::matching::{Algorithm, GsmFallback};
use stakemarket::money::Money;
use stakemarket::race::{best_response_scan, hour_grid, run_race, Field};
use stakemarket::report::write_run;
use stakemarket::verify::{run_suite, write_artifacts, Suite};

/// Overrides every default output directory.
const OUT_ENV: &str = "STAKEMARKET_OUT";

#[derive(Parser)]
#[command(name = "stakemarket", version, about = "Two-sided compute market simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file through the period loop.
    Run(RunArgs),
    /// Run the property suites and write their artifacts.
    VerifyBounds(VerifyArgs),
    /// Exhaustive constrained-adversary searches.
    AdversarySearch(AdversaryArgs),
    /// Settle a provider race and write its payoff table.
    Race(RaceArgs),
    /// Count matcher operations as the pool grows.
    ComplexityBench(BenchArgs),
}

#[derive(Args)]
struct MatcherFlags {
    /// Matcher: gcm, gsm, cfm or cfm-reject.
    #[arg(long)]
    algo: Option<String>,
    /// What GSM does with a job nobody can finish: reject or longest.
    #[arg(long)]
    gsm_fallback: Option<GsmFallback>,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[command(flatten)]
    matcher: MatcherFlags,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run one suite instead of all of them.
    #[arg(long)]
    suite: Option<Suite>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdversaryArgs {
    /// Stake pairs as `short,long`; defaults to the standard five.
    #[arg(long = "pair", value_parser = parse_pair)]
    pairs: Vec<(u32, u32)>,
    /// Drop the cap that limits each job to the longest idle remaining time.
    #[arg(long)]
    budget_only: bool,
    /// Descending capacity list for the peel-and-load comparison, e.g. `5,2,2,2`.
    #[arg(long, value_delimiter = ',')]
    peel: Vec<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RaceArgs {
    /// Scenario file with a `[race]` section.
    config: PathBuf,
    #[arg(long)]
    epsilon: Option<u32>,
    #[arg(long)]
    stake: Option<Money>,
    #[arg(long)]
    price: Option<Money>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Largest pool size as a power of two.
    #[arg(long, default_value_t = 16)]
    max_exp: u32,
    #[arg(long, default_value_t = 3)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    matcher: MatcherFlags,
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected `short,long`")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn out_dir(flag: Option<PathBuf>, default: impl FnOnce() -> PathBuf) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(default)
}

/// Exit code 2 marks bad input; 1 marks failures found while running.
struct Failure(u8, anyhow::Error);

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure(2, e.into())
}

fn fault(e: impl Into<anyhow::Error>) -> Failure {
    Failure(1, e.into())
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    ScenarioConfig::load(path)
        .map_err(|e: ConfigError| usage(anyhow::Error::new(e).context(format!("invalid scenario {}", path.display()))))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    if let Some(algo) = args.matcher.algo {
        cfg.run.algo = algo;
    }
    if let Some(fb) = args.matcher.gsm_fallback {
        cfg.run.gsm_fallback = fb;
    }
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
        if let Some(g) = cfg.generator.as_mut() {
            g.seed = Some(seed);
        }
    }
    let scenario = cfg.validate().map_err(usage)?;
    let mut state = MarketState::new(&scenario.params, scenario.providers, scenario.jobs).map_err(usage)?;
    run(&mut state, &scenario.params, scenario.algo).map_err(fault)?;
    let stem = args.config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    let dir = out_dir(args.out, || PathBuf::from("runs").join(stem));
    write_run(&dir, &state, scenario.algo.name())
        .with_context(|| format!("writing {}", dir.display()))
        .map_err(fault)?;
    println!("{} periods written to {}", state.history.len(), dir.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let suites: Vec<Suite> = args.suite.map_or_else(|| Suite::ALL.to_vec(), |s| vec![s]);
    let results: Vec<_> = suites.iter().map(|&s| run_suite(s, args.seed)).collect();
    for r in &results {
        println!("{}", r.line());
        for d in &r.details {
            println!("  {d}");
        }
    }
    let dir = out_dir(args.out, || PathBuf::from("verify"));
    write_artifacts(&dir, &results).with_context(|| format!("writing {}", dir.display())).map_err(fault)?;
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.suite.name()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(fault(anyhow::anyhow!("failed suites: {}", failed.join(", "))))
    }
}

fn cmd_adversary(args: AdversaryArgs) -> Result<(), Failure> {
    let rules = if args.budget_only { AdversaryRules::BUDGET_ONLY } else { AdversaryRules::CAPPED };
    let pairs = if args.pairs.is_empty() { stakemarket::verify::DEFAULT_PAIRS.to_vec() } else { args.pairs };
    let mut text = String::from("# stakemarket adversary v1\nshort,long,hyper_period,coprime,cfm,gsm,excess,max_per_period,cycle_violations,holds\n");
    let mut ok = true;
    for (s, l) in pairs {
        let r = compare_two_provider(s, l, rules).map_err(usage)?;
        ok &= r.holds();
        writeln!(
            text,
            "{s},{l},{},{},{},{},{},{},{},{}",
            r.hyper_period,
            r.coprime,
            r.cfm.max_infeasible,
            r.gsm.max_infeasible,
            r.excess(),
            r.cfm.max_per_period.max(r.gsm.max_per_period),
            r.cfm.cycle_violations + r.gsm.cycle_violations,
            r.holds()
        )
        .expect("string write");
    }
    if !args.peel.is_empty() {
        let rep = peel_and_load(&args.peel).map_err(usage)?;
        let show = |u: Option<usize>| u.map_or("none".to_string(), |u| u.to_string());
        let cfm = peel_brute_force(&args.peel, Algorithm::Cfm).map_err(usage)?;
        let gsm = peel_brute_force(&args.peel, Algorithm::Gsm(GsmFallback::Longest)).map_err(usage)?;
        writeln!(text, "\n# peel taus={:?}", args.peel).expect("string write");
        writeln!(text, "policy,saves,threshold,formula_u_max,brute_force").expect("string write");
        for (name, saves, th, u, bf) in [
            ("cfm", &rep.saves_cfm, rep.threshold_cfm, rep.u_max_cfm(), cfm),
            ("gsm", &rep.saves_gsm, rep.threshold_gsm, rep.u_max_gsm(), gsm),
        ] {
            let saves = saves.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
            writeln!(text, "{name},{saves},{},{},{bf}", show(th), show(u)).expect("string write");
        }
    }
    print!("{text}");
    let dir = out_dir(args.out, || PathBuf::from("adversary"));
    std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("adversary.csv"), &text)).map_err(fault)?;
    if ok {
        Ok(())
    } else {
        Err(fault(anyhow::anyhow!("the excess bound failed for at least one pair")))
    }
}

fn cmd_race(args: RaceArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let scenario = cfg.validate().map_err(usage)?;
    let Some((mut race, grid_max)) = scenario.race else {
        return Err(usage(anyhow::anyhow!("{} has no [race] section", args.config.display())));
    };
    if let Some(e) = args.epsilon {
        race.epsilon = e;
    }
    if let Some(s) = args.stake {
        race.stake = s;
    }
    if let Some(p) = args.price {
        race.price = p;
    }
    let grid = hour_grid(grid_max);
    let outcome = run_race(&race).map_err(usage)?;
    let mut csv =
        String::from("# stakemarket race v1\nracer,true_time,quote,field_quote,field_wins_ties,payoff,undominated\n");
    for k in 0..race.racers.len() {
        let scan = best_response_scan(&race, k, &grid).map_err(usage)?;
        for (qi, &q) in scan.grid.iter().enumerate() {
            for (fi, f) in scan.fields.iter().enumerate() {
                let (fq, ties) = match f {
                    Field::Alone => ("-".to_string(), "-".to_string()),
                    Field::Lowest { quote, wins_ties } => (quote.to_string(), wins_ties.to_string()),
                };
                writeln!(
                    csv,
                    "{},{},{q},{fq},{ties},{},{}",
                    scan.racer,
                    scan.true_time,
                    scan.table[qi][fi],
                    scan.undominated.contains(&q)
                )
                .expect("string write");
            }
        }
        println!("racer {} (true time {}): undominated quotes {:?}", scan.racer, scan.true_time, scan.undominated);
    }
    println!(
        "winner {} quote {} true time {} paid {} stake {} net {}",
        outcome.winner,
        outcome.quote,
        outcome.true_time,
        outcome.paid,
        if outcome.stake_returned { "returned" } else { "forfeited" },
        stakemarket::report::signed_ticks(outcome.net)
    );
    let dir = out_dir(args.out, || PathBuf::from("race"));
    std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("race.csv"), csv)).map_err(fault)?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    if !(4..=20).contains(&args.max_exp) {
        return Err(usage(anyhow::anyhow!("--max-exp must lie in 4..=20")));
    }
    let only = match &args.matcher.algo {
        Some(a) => Some(Algorithm::parse(a, args.matcher.gsm_fallback.unwrap_or_default()).map_err(usage)?),
        None => None,
    };
    let rep = complexity_bench(4, args.max_exp, args.reps.max(1), args.seed);
    let mut csv = String::from("# stakemarket complexity v1\nalgo,n,jobs,ops_per_job\n");
    println!("{:<12} {:>8} {:>12} {:>12}", "algo", "n", "ops/job", "ns/job");
    for row in rep.rows.iter().filter(|r| only.is_none_or(|a| a == r.algo)) {
        println!("{:<12} {:>8} {:>12.3} {:>12.1}", row.algo.name(), row.n, row.ops_per_job, row.nanos_per_job);
        writeln!(csv, "{},{},{},{:.4}", row.algo, row.n, row.jobs, row.ops_per_job).expect("string write");
    }
    println!(
        "cfm correlation with log2 n: {:.4}; gcm max/min ops: {:.3}",
        rep.log_correlation(Algorithm::Cfm),
        rep.spread(Algorithm::Gcm)
    );
    let dir = out_dir(args.out, || PathBuf::from("bench"));
    std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("complexity.csv"), csv)).map_err(fault)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::VerifyBounds(a) => cmd_verify(a),
        Command::AdversarySearch(a) => cmd_adversary(a),
        Command::Race(a) => cmd_race(a),
        Command::ComplexityBench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
