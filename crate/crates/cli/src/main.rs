use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use socicache::config::ScenarioConfig;
use socicache::error::{ConfigError, Error};
use socicache::experiment::{
    cache_comparison_csv, compare_caches, compare_strategies, render_table, run_scenario, strategy_comparison_csv,
    write_comparison, write_manifest, write_run, RunManifest, RunOutput,
};
use socicache::metrics::fmt_ratio;
use socicache::workload::{load_trace, TraceEvent};

#[derive(Parser)]
#[command(name = "socicache", version, about = "Social caching simulator for DHT-based social networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and write metrics.csv and summary.csv.
    Run(Common),
    /// Run Random, Trend and SocialScore on the same trace (social cache only).
    CompareStrategies(Common),
    /// Run the four cache settings on the same trace (SocialScore strategy).
    CompareCaches(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "SOCICACHE_OUT", default_value = "out")]
    out: PathBuf,
    /// KEY=VALUE override, applied after the config file; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Replay a trace file instead of generating one.
    #[arg(long)]
    trace: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(c) => Failure::Config(c.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn resolve(base: ScenarioConfig, args: &Common) -> Result<ScenarioConfig, Failure> {
    let text = match &args.config {
        Some(path) => Some(
            fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut overrides = args.set.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    Ok(ScenarioConfig::resolve(base, text.as_deref(), &overrides)?)
}

fn load(args: &Common) -> Result<Option<Vec<TraceEvent>>, Failure> {
    match &args.trace {
        Some(path) => load_trace(path)
            .map(Some)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => Ok(None),
    }
}

fn manifest(cfg: &ScenarioConfig, args: &Common) -> Result<(), Failure> {
    write_manifest(&RunManifest {
        config_path: args.config.clone(),
        config: cfg.clone(),
        output_dir: args.out.clone(),
    })?;
    Ok(())
}

fn report_violations(runs: &[RunOutput]) {
    for r in runs {
        if !r.violations.is_empty() {
            eprintln!(
                "warning: {}: {} social cache entries disagree with the DHT",
                r.summary.label,
                r.violations.len()
            );
        }
    }
}

fn cmd_run(args: &Common) -> Result<(), Failure> {
    let cfg = resolve(ScenarioConfig::default(), args)?;
    let trace = load(args)?;
    let run = run_scenario(&cfg, "run", trace.as_deref())?;
    write_run(&args.out, &run)?;
    manifest(&cfg, args)?;
    report_violations(std::slice::from_ref(&run));
    let s = &run.summary;
    let c = &s.counters;
    println!("run {} ({} / {}, seed {})", s.run_id, s.strategy, s.cache_setup, s.seed);
    println!(
        "requests {}  social {}  current {}  overlay {}  hit ratio {}",
        c.total_requests,
        c.social_hits,
        c.current_hits,
        c.overlay_replies,
        fmt_ratio(s.cache_hit_ratio())
    );
    println!("wrote {}", Path::new(&args.out).display());
    Ok(())
}

fn cmd_compare(args: &Common, caches: bool) -> Result<(), Failure> {
    let base = if caches {
        ScenarioConfig::cache_comparison()
    } else {
        ScenarioConfig::default()
    };
    let cfg = resolve(base, args)?;
    let trace = load(args)?;
    let (runs, csv) = if caches {
        let runs = compare_caches(&cfg, trace.as_deref())?;
        let csv = cache_comparison_csv(&runs);
        (runs, csv)
    } else {
        let runs = compare_strategies(&cfg, trace.as_deref())?;
        let csv = strategy_comparison_csv(&runs);
        (runs, csv)
    };
    write_comparison(&args.out, &runs, &csv)?;
    manifest(&cfg, args)?;
    report_violations(&runs);
    print!("{}", render_table(&csv));
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::CompareStrategies(args) => cmd_compare(args, false),
        Command::CompareCaches(args) => cmd_compare(args, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
